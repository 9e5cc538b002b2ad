#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gk {

// Dense row-major tensor. Training runs on float; the gradient-check harness
// instantiates the whole stack on double.
template <typename T>
struct TensorT {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }
    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    T& operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

// Named parameter handle: a model exposes its weights and gradient buffers
// through these for the optimizer and the serializer.
template <typename T>
struct ParamRef {
    std::string name;
    TensorT<T>* value = nullptr;
    TensorT<T>* grad = nullptr;
};

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const RowMat<T>>;

}  // namespace detail

// C[m x n] (+)= A[m x k] * B[k x n]; optional transposes address A as [k x m]
// or B as [n x k]. All buffers row-major.
template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
          bool trans_a = false, bool trans_b = false, bool accumulate = false) {
    using namespace detail;
    MatMap<T> C(c, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    auto run = [&](const auto& A, const auto& B) {
        if (accumulate)
            C.noalias() += A * B;
        else
            C.noalias() = A * B;
    };
    if (!trans_a && !trans_b)
        run(CMatMap<T>(a, m, k), CMatMap<T>(b, k, n));
    else if (trans_a && !trans_b)
        run(CMatMap<T>(a, k, m).transpose(), CMatMap<T>(b, k, n));
    else if (!trans_a && trans_b)
        run(CMatMap<T>(a, m, k), CMatMap<T>(b, n, k).transpose());
    else
        run(CMatMap<T>(a, k, m).transpose(), CMatMap<T>(b, n, k).transpose());
}

}  // namespace gk
