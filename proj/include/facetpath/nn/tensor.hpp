#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facetpath/taxonomy.hpp"

namespace facetpath::nn {

// Column-major; a batch is laid out as one column per example.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

    void zero_grad() { grad.setZero(); }
};

// uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(...))
void glorot_uniform(Matrix& m, std::mt19937_64& rng);

inline void require_rows(const Matrix& m, Eigen::Index rows, const char* what) {
    if (m.rows() != rows)
        throw Error(std::string(what) + ": expected " + std::to_string(rows) + " rows, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace facetpath::nn
