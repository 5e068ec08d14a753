#include "sinevid/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sinevid::kernels::scalar {

template <class T>
void gemm(const GemmArgs<T>& g)
{
    for (index_t i = 0; i < g.m; ++i) {
        T* crow = g.c + i * g.ldc;
        if (!g.accumulate)
            std::fill(crow, crow + g.n, T(0));
        for (index_t p = 0; p < g.k; ++p) {
            const T aip = g.a[i * g.a_rs + p * g.a_cs];
            const T* brow = g.b + p * g.ldb;
            for (index_t j = 0; j < g.n; ++j)
                crow[j] += aip * brow[j];
        }
    }
}

template <class T>
void sine_forward(index_t n, T omega, const T* x, T* y)
{
    for (index_t i = 0; i < n; ++i)
        y[i] = std::sin(omega * x[i]);
}

template <class T>
void sine_backward(index_t n, T omega, const T* x, const T* gy, T* gx)
{
    for (index_t i = 0; i < n; ++i)
        gx[i] += gy[i] * omega * std::cos(omega * x[i]);
}

template <class T>
void add_rows(index_t rows, index_t cols, index_t group_rows, const T* a, const T* b, T* out)
{
    for (index_t i = 0; i < rows; ++i) {
        const T* brow = b + (i / group_rows) * cols;
        for (index_t j = 0; j < cols; ++j)
            out[i * cols + j] = a[i * cols + j] + brow[j];
    }
}

template <class T>
void sum_rows_grouped(index_t rows, index_t cols, index_t group_rows, const T* g, T* out)
{
    for (index_t i = 0; i < rows; ++i) {
        T* orow = out + (i / group_rows) * cols;
        for (index_t j = 0; j < cols; ++j)
            orow[j] += g[i * cols + j];
    }
}

template <class T>
void axpy(index_t n, T alpha, const T* x, T* y)
{
    for (index_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

template <class T>
T squared_distance(index_t n, const T* a, const T* b)
{
    T acc = 0;
    for (index_t i = 0; i < n; ++i) {
        const T d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

template <class T>
void scaled_difference(index_t n, T alpha, const T* a, const T* b, T* out)
{
    for (index_t i = 0; i < n; ++i)
        out[i] += alpha * (a[i] - b[i]);
}

#define SINEVID_INSTANTIATE(T)                                                                   \
    template void gemm<T>(const GemmArgs<T>&);                                                   \
    template void sine_forward<T>(index_t, T, const T*, T*);                                     \
    template void sine_backward<T>(index_t, T, const T*, const T*, T*);                          \
    template void add_rows<T>(index_t, index_t, index_t, const T*, const T*, T*);                \
    template void sum_rows_grouped<T>(index_t, index_t, index_t, const T*, T*);                  \
    template void axpy<T>(index_t, T, const T*, T*);                                             \
    template T squared_distance<T>(index_t, const T*, const T*);                                 \
    template void scaled_difference<T>(index_t, T, const T*, const T*, T*);

SINEVID_INSTANTIATE(float)
SINEVID_INSTANTIATE(double)
#undef SINEVID_INSTANTIATE

} // namespace sinevid::kernels::scalar
