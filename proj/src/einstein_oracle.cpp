#include "ahelab/einstein.hpp"
#include "ahelab/errors.hpp"

#include <array>
#include <algorithm>
#include <cmath>

namespace ahelab {

namespace {

using Mat4 = Eigen::Matrix4d;
using Gamma = std::array<Mat4, 4>;  // Gamma[k](i, j)

struct FullMetric {
    const CohomOneMetric& g;

    // physical metric in (r, theta, phi, psi)
    Mat4 operator()(const std::array<double, 4>& x) const {
        const double r = x[0], th = x[1];
        const auto m = g.eval(r);
        const double rho = (1.0 - r) * (1.0 + r) / (1.0 + r * r);
        const double A = m[0].v / (rho * rho);
        const double B1 = r * r * m[1].v / (rho * rho);
        const double B3 = r * r * m[2].v / (rho * rho);
        const double s = std::sin(th), c = std::cos(th);
        Mat4 G = Mat4::Zero();
        G(0, 0) = A;
        G(1, 1) = B1 / 4.0;
        G(2, 2) = (B1 * s * s + B3 * c * c) / 4.0;
        G(3, 3) = B3 / 4.0;
        G(2, 3) = G(3, 2) = B3 * c / 4.0;
        return G;
    }
};

template <class F, class V>
V d4(const F& f, std::array<double, 4> x, int dir, double h) {
    const double x0 = x[dir];
    auto at = [&](double t) {
        x[dir] = x0 + t;
        return f(x);
    };
    V out = (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h);
    return out;
}

Gamma christoffel(const FullMetric& G, const std::array<double, 4>& x, double h) {
    const Mat4 g = G(x);
    const Mat4 gi = g.inverse();
    std::array<Mat4, 4> dg;
    for (int l = 0; l < 4; ++l) dg[l] = d4<FullMetric, Mat4>(G, x, l, h);
    Gamma out;
    for (int k = 0; k < 4; ++k) {
        out[k].setZero();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int l = 0; l < 4; ++l) s += gi(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                out[k](i, j) = 0.5 * s;
            }
    }
    return out;
}

}  // namespace

double fd_einstein_defect(const CohomOneMetric& g, double r, double theta, double h) {
    if (g.spec.n != 3) throw Error(Errc::InvalidSpec, "finite-difference oracle is four-dimensional");
    if (h <= 0.0) h = std::clamp(2e-3 * rho_of_r(r).v, 1e-4, 1e-3);
    if (!(r > 2 * h && r < 1.0 - 2 * h)) throw Error(Errc::ParameterViolation, "probe too close to r = 0 or 1");
    const FullMetric G{g};
    const std::array<double, 4> x{r, theta, 0.3, 0.7};
    const Gamma Gm = christoffel(G, x, h);
    // dGamma[l][k](i, j) = d_l Gamma^k_ij
    std::array<Gamma, 4> dG;
    for (int l = 0; l < 4; ++l) {
        auto f = [&](const std::array<double, 4>& y) { return christoffel(G, y, h); };
        std::array<double, 4> y = x;
        const double y0 = y[l];
        auto at = [&](double t) {
            y[l] = y0 + t;
            return f(y);
        };
        const Gamma m2 = at(-2 * h), m1 = at(-h), p1 = at(h), p2 = at(2 * h);
        for (int k = 0; k < 4; ++k) dG[l][k] = (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h);
    }
    Mat4 Ric = Mat4::Zero();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) {
                s += dG[k][k](i, j) - dG[j][k](i, k);
                for (int l = 0; l < 4; ++l) s += Gm[k](k, l) * Gm[l](i, j) - Gm[k](j, l) * Gm[l](i, k);
            }
            Ric(i, j) = s;
        }
    const Mat4 gx = G(x);
    const Mat4 E = 0.5 * (Ric + Ric.transpose()) + 3.0 * gx;
    const Mat4 gi = gx.inverse();
    const Mat4 T = gi * E * gi * E;
    return std::sqrt(std::abs(T.trace()));
}

}  // namespace ahelab
