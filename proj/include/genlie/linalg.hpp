#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace genlie {

using Vec = std::vector<double>;

// Dense row-major matrix. Small models only; no BLAS.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
};

inline void check_dim(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("dimension mismatch: ") + what);
}

// y = M x
inline Vec matvec(const Mat& m, const Vec& x) {
    check_dim(m.cols == x.size(), "matvec");
    Vec y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = &m.data[r * m.cols];
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

// y = M^T x
inline Vec matvec_t(const Mat& m, const Vec& x) {
    check_dim(m.rows == x.size(), "matvec_t");
    Vec y(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = &m.data[r * m.cols];
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += row[c] * x[r];
    }
    return y;
}

// M += a b^T
inline void add_outer(Mat& m, const Vec& a, const Vec& b) {
    check_dim(m.rows == a.size() && m.cols == b.size(), "add_outer");
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = &m.data[r * m.cols];
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += a[r] * b[c];
    }
}

inline void axpy(double a, const Vec& x, Vec& y) {
    check_dim(x.size() == y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double dot(const Vec& a, const Vec& b) {
    check_dim(a.size() == b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double squared_distance(const Vec& a, const Vec& b) {
    check_dim(a.size() == b.size(), "squared_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace genlie
