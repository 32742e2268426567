#ifndef RELAXCYCLE_LINALG_HPP
#define RELAXCYCLE_LINALG_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace relaxcycle {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

template <std::size_t N>
inline Vec<N> operator+(const Vec<N>& a, const Vec<N>& b)
{
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
    return r;
}

template <std::size_t N>
inline Vec<N> operator-(const Vec<N>& a, const Vec<N>& b)
{
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
    return r;
}

template <std::size_t N>
inline Vec<N> operator*(double s, const Vec<N>& a)
{
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
    return r;
}

template <std::size_t N>
inline Vec<N>& operator+=(Vec<N>& a, const Vec<N>& b)
{
    for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
    return a;
}

template <std::size_t N>
inline double dot(const Vec<N>& a, const Vec<N>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
inline double norm(const Vec<N>& a)
{
    return std::sqrt(dot(a, a));
}

template <std::size_t N>
inline double norm_inf(const Vec<N>& a)
{
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

template <std::size_t N>
inline Mat<N> mat_zero()
{
    Mat<N> m{};
    for (auto& row : m) row.fill(0.0);
    return m;
}

template <std::size_t N>
inline Vec<N> mat_vec(const Mat<N>& m, const Vec<N>& v)
{
    Vec<N> r{};
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += m[i][j] * v[j];
        r[i] = s;
    }
    return r;
}

// In-place LU with partial pivoting for the small systems used here.
template <std::size_t N>
struct Lu {
    Mat<N> lu;
    std::array<std::size_t, N> perm;

    explicit Lu(Mat<N> a) : lu(a)
    {
        for (std::size_t i = 0; i < N; ++i) perm[i] = i;
        for (std::size_t k = 0; k < N; ++k) {
            std::size_t p = k;
            double best = std::abs(lu[k][k]);
            for (std::size_t i = k + 1; i < N; ++i) {
                if (std::abs(lu[i][k]) > best) {
                    best = std::abs(lu[i][k]);
                    p = i;
                }
            }
            if (best == 0.0) throw std::runtime_error("lu: singular matrix");
            if (p != k) {
                std::swap(lu[p], lu[k]);
                std::swap(perm[p], perm[k]);
            }
            for (std::size_t i = k + 1; i < N; ++i) {
                lu[i][k] /= lu[k][k];
                for (std::size_t j = k + 1; j < N; ++j)
                    lu[i][j] -= lu[i][k] * lu[k][j];
            }
        }
    }

    Vec<N> solve(const Vec<N>& b) const
    {
        Vec<N> x{};
        for (std::size_t i = 0; i < N; ++i) x[i] = b[perm[i]];
        for (std::size_t i = 1; i < N; ++i)
            for (std::size_t j = 0; j < i; ++j) x[i] -= lu[i][j] * x[j];
        for (std::size_t i = N; i-- > 0;) {
            for (std::size_t j = i + 1; j < N; ++j) x[i] -= lu[i][j] * x[j];
            x[i] /= lu[i][i];
        }
        return x;
    }
};

// Angle between two direction vectors; the atan2 form stays accurate for
// nearly parallel inputs where acos of the normalized dot saturates.
template <std::size_t N>
inline double angle_between(const Vec<N>& a, const Vec<N>& b)
{
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    Vec<N> d{}, s{};
    for (std::size_t i = 0; i < N; ++i) {
        d[i] = a[i] / na - b[i] / nb;
        s[i] = a[i] / na + b[i] / nb;
    }
    return 2.0 * std::atan2(norm(d), norm(s));
}

// Largest singular value of a 2x2 matrix, closed form.
inline double spectral_norm_2x2(double a, double b, double c, double d)
{
    const double q = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, q * q - 4.0 * det * det));
    return std::sqrt(0.5 * (q + disc));
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

// Least-squares line through (x_i, y_i) with coefficient of determination.
template <typename XS, typename YS>
inline LinearFit linear_fit(const XS& xs, const YS& ys)
{
    const std::size_t n = xs.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / double(n), my = sy / double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += e * e;
    }
    f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    return f;
}

} // namespace relaxcycle

#endif
