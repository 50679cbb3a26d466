#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "facetpath/count_model.hpp"
#include "facetpath/decision.hpp"
#include "facetpath/evaluation.hpp"
#include "facetpath/pipeline.hpp"
#include "facetpath/service/augment.hpp"

namespace py = pybind11;
using namespace facetpath;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
std::string simulate_json(const TaxonomyTree& tree, const std::vector<ProductId>& result_set,
                          const std::vector<ProductId>& clicked, const std::string& predicted) {
    auto outcome = simulate_event(result_set, clicked, tree.parse_path(predicted), tree);
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j = {{"tp", outcome.tp},
                        {"fp", outcome.fp},
                        {"fn", outcome.fn},
                        {"filtered_size", outcome.filtered_size},
                        {"precision", opt(outcome.precision)},
                        {"recall", opt(outcome.recall)}};
    return j.dump();
}

std::string experiment_json(const std::filesystem::path& catalog, const std::filesystem::path& events,
                            double train_fraction, const std::vector<std::string>& variants,
                            const std::vector<double>& fractions, const std::vector<std::uint64_t>& seeds,
                            std::size_t max_epochs, std::size_t patience, double learning_rate) {
    auto data = load_dataset(catalog, events, train_fraction);
    ExperimentConfig cfg;
    if (!variants.empty()) {
        cfg.variants.clear();
        for (const auto& v : default_variants())
            if (std::find(variants.begin(), variants.end(), v.name) != variants.end()) cfg.variants.push_back(v);
        if (cfg.variants.empty()) throw Error("no known variant selected");
    }
    cfg.fractions = fractions;
    cfg.seeds = seeds;
    cfg.train.max_epochs = max_epochs;
    cfg.train.patience = patience;
    cfg.train.learning_rate = learning_rate;
    EvalReport report;
    {
        py::gil_scoped_release release;
        report = run_experiment_suite(data.dataset(), cfg);
    }
    return to_json(report, false).dump();
}

class Service {
public:
    Service(const ArtifactPaths& paths, double ct, std::size_t cache_capacity) {
        ServiceConfig cfg;
        cfg.ct = ct;
        cfg.cache_capacity = cache_capacity;
        service_ = std::make_unique<AugmentService>(cfg);
        service_->load(load_artifacts(paths));
    }

    std::string augment(const std::string& body) {
        auto req = parse_augment_request(nlohmann::json::parse(body), service_->config().max_candidates);
        auto resp = service_->augment(req);
        return to_json(resp, *service_->artifacts()->tree).dump();
    }
    std::string simulate(const std::string& body) { return service_->simulate(nlohmann::json::parse(body)).dump(); }
    std::string sweep() const { return service_->sweep().dump(); }
    std::string health() const { return service_->health().dump(); }
    std::string metrics() const { return service_->metrics_text(); }

private:
    std::unique_ptr<AugmentService> service_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "facetpath core: taxonomy, decision rule, replay evaluation and the augmentation service";

    py::register_exception<Error>(m, "FacetPathError", PyExc_RuntimeError);
    py::register_exception<RequestError>(m, "RequestError", PyExc_ValueError);

    m.def("gini", [](const std::vector<double>& d) { return gini(d); }, py::arg("distribution"));
    m.def("git_describe", &git_describe);

    py::class_<TaxonomyTree>(m, "Taxonomy")
        .def_static("load", &load_catalog, py::arg("catalog"))
        .def_property_readonly("max_depth", &TaxonomyTree::max_depth)
        .def_property_readonly("product_count", &TaxonomyTree::product_count)
        .def_property_readonly("vocabulary_size", &TaxonomyTree::vocabulary_size)
        .def("path_of",
             [](const TaxonomyTree& t, const std::string& id) -> std::optional<std::string> {
                 const auto* p = t.path_of(id);
                 if (!p) return std::nullopt;
                 return t.to_string(*p);
             })
        .def("is_valid_path", [](const TaxonomyTree& t, const std::string& p) { return t.is_valid_path(t.parse_path(p)); })
        .def("leaf_paths", [](const TaxonomyTree& t) {
            std::vector<std::string> out;
            for (const auto& p : t.leaf_paths()) out.push_back(t.to_string(p));
            return out;
        });

    m.def("_simulate_event", &simulate_json, py::arg("taxonomy"), py::arg("result_set"), py::arg("clicked"),
          py::arg("predicted_path"));

    m.def(
        "generate_synthetic",
        [](const std::filesystem::path& out_dir, std::uint64_t seed, std::size_t sessions, std::size_t products,
           double coherence) {
            SynthConfig cfg;
            cfg.n_sessions = sessions;
            cfg.n_products = products;
            cfg.session_coherence_rate = coherence;
            SyntheticFiles files;
            {
                py::gil_scoped_release release;
                files = write_synthetic(generate_synthetic(cfg, seed), out_dir);
            }
            return py::dict(py::arg("catalog") = files.catalog_file, py::arg("events") = files.log_file,
                            py::arg("manifest") = files.manifest_file, py::arg("emitted_events") = files.emitted_events);
        },
        py::arg("out_dir"), py::arg("seed") = 1, py::arg("sessions") = SynthConfig{}.n_sessions,
        py::arg("products") = SynthConfig{}.n_products, py::arg("coherence") = SynthConfig{}.session_coherence_rate);

    m.def(
        "train_embeddings",
        [](const std::filesystem::path& catalog, const std::filesystem::path& events, const std::filesystem::path& out_dir,
           std::uint64_t seed, std::size_t dim, std::size_t epochs, double train_fraction) {
            auto data = load_dataset(catalog, events, train_fraction);
            SkipGramConfig cfg;
            cfg.seed = seed;
            cfg.dim = dim;
            cfg.epochs = epochs;
            std::filesystem::create_directories(out_dir);
            const auto files = embedding_files(out_dir);
            py::gil_scoped_release release;
            auto emb = train_embeddings(data, cfg, cfg);
            emb.products.save(files.products);
            emb.queries.save(files.queries);
            emb.words.save(files.words);
        },
        py::arg("catalog"), py::arg("events"), py::arg("out_dir"), py::arg("seed") = 1, py::arg("dim") = 50,
        py::arg("epochs") = 10, py::arg("train_fraction") = 0.8);

    m.def(
        "train_count_model",
        [](const std::filesystem::path& catalog, const std::filesystem::path& events, const std::filesystem::path& out,
           double train_fraction, double threshold) {
            auto data = load_dataset(catalog, events, train_fraction);
            auto cm = CountModel::train(data.split.train, *data.tree, threshold);
            cm.save(out, *data.tree);
            return cm.query_count();
        },
        py::arg("catalog"), py::arg("events"), py::arg("out"), py::arg("train_fraction") = 0.8,
        py::arg("threshold") = CountModel::kDefaultThreshold);

    m.def("_run_experiment", &experiment_json, py::arg("catalog"), py::arg("events"), py::arg("train_fraction"),
          py::arg("variants"), py::arg("fractions"), py::arg("seeds"), py::arg("max_epochs"), py::arg("patience"),
          py::arg("learning_rate"));

    py::class_<ArtifactPaths>(m, "ArtifactPaths")
        .def(py::init<>())
        .def_readwrite("catalog", &ArtifactPaths::catalog)
        .def_readwrite("product_embeddings", &ArtifactPaths::product_embeddings)
        .def_readwrite("query_embeddings", &ArtifactPaths::query_embeddings)
        .def_readwrite("count_model", &ArtifactPaths::count_model)
        .def_readwrite("mlp_checkpoint", &ArtifactPaths::mlp_checkpoint)
        .def_readwrite("sessionpath_checkpoint", &ArtifactPaths::sessionpath_checkpoint)
        .def_readwrite("trace", &ArtifactPaths::trace)
        .def_readwrite("default_model", &ArtifactPaths::default_model);

    py::class_<Service>(m, "_Service")
        .def(py::init<const ArtifactPaths&, double, std::size_t>(), py::arg("paths"), py::arg("ct") = 0.993,
             py::arg("cache_capacity") = 10000)
        .def("augment", &Service::augment)
        .def("simulate", &Service::simulate)
        .def("sweep", &Service::sweep)
        .def("health", &Service::health)
        .def("metrics", &Service::metrics);
}
