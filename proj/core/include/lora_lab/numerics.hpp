// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices, the handful of kernels the model needs, and a
// bit-exact portable random stream (SplitMix64 + Box-Muller).

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lora_lab {

/// Dense 2-D array of doubles in row-major order.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    void fill(double v);
    bool all_finite() const;

    /// "RxC", used in error messages.
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * transpose(b).
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// transpose(a) * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// out += transpose(a) * b; used to accumulate weight gradients in place.
void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out);

Matrix transpose(const Matrix& m);
std::vector<double> matvec(const Matrix& m, std::span<const double> x);

void add_inplace(Matrix& dst, const Matrix& src);
void scale_inplace(Matrix& m, double s);
/// Adds the 1xN row vector `bias` to every row of `m`.
void add_row_bias(Matrix& m, const Matrix& bias);
/// Accumulates column sums of `m` into the 1xN `out`.
void column_sums_accumulate(const Matrix& m, Matrix& out);

/// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& m);

inline constexpr double kLayerNormEps = 1e-5;

/// (x - mean) / sqrt(var + eps) * gamma + beta, with population variance.
std::vector<double> layer_norm_row(std::span<const double> x,
                                   std::span<const double> gamma,
                                   std::span<const double> beta,
                                   double eps = kLayerNormEps);

/// One SplitMix64 output step applied to an arbitrary value; used to derive
/// independent seeds (e.g. `splitmix64(master ^ index)`).
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic random stream: SplitMix64 for integers and uniforms,
/// Box-Muller for gaussians. Identical seeds give identical sequences on
/// every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform in (0, 1].
    double uniform();
    /// Standard normal; values come in Box-Muller pairs, the second is cached.
    double gaussian();
    /// Uniform integer in [0, n). Requires n > 0.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
    std::optional<double> cached_gaussian_;
};

Matrix random_gaussian(std::size_t rows, std::size_t cols, double stddev, RngStream& rng);

}  // namespace lora_lab
