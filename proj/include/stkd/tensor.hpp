#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace stkd {

/// Dense row-major tensor of doubles. The only value type the toolkit
/// moves around; most of the code works with 2-D [rows x cols] instances.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<std::size_t> shape);
    /// 2-D builder from nested braces, for tests and small fixtures.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    std::size_t numel() const { return data.size(); }
    bool empty() const { return data.empty(); }
    std::size_t rank() const { return shape.size(); }

    // 2-D accessors; throw on rank mismatch.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

bool operator==(const Tensor& a, const Tensor& b);

// Matrix kernels. Plain scalar loops; shapes validated.
Tensor matmul(const Tensor& a, const Tensor& b);              // [m,k]x[k,n]
Tensor matmul_transpose_a(const Tensor& a, const Tensor& b);  // a^T b: [k,m]^T x [k,n]
Tensor matmul_transpose_b(const Tensor& a, const Tensor& b);  // a b^T: [m,k] x [n,k]^T

/// Row-wise softmax with max-shift stabilization. Rejects non-finite logits.
Tensor softmax(const Tensor& logits);

/// Row-wise log(softmax(x)) via max-shift; shares the stabilization with softmax.
Tensor log_softmax(const Tensor& logits);

}  // namespace stkd
