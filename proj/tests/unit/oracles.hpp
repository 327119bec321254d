// SPDX-License-Identifier: Apache-2.0
//
// Straightforward reference implementations used as test oracles. They share
// no code with the library beyond the Matrix container and parameter names.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <vector>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/evaluation.hpp"
#include "lora_lab/numerics.hpp"
#include "lora_lab/params.hpp"

namespace oracle {

using lora_lab::Matrix;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

/// y = x W^T + b for one row vector x.
inline std::vector<double> linear(const std::vector<double>& x, const Matrix& w, const Matrix& b) {
    std::vector<double> y(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double s = b(0, i);
        for (std::size_t j = 0; j < w.cols(); ++j) s += w(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline std::vector<double> layer_norm(const std::vector<double>& x, const Matrix& g, const Matrix& b) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean) / std::sqrt(var + 1e-5) * g(0, i) + b(0, i);
    return y;
}

/// Effective weight of an attention projection: W + (alpha/r) B A when the
/// projection carries LoRA factors.
inline Matrix effective_weight(const lora_lab::ModelParams& p, const lora_lab::AdaptationState& st,
                               std::size_t layer, lora_lab::Target t) {
    Matrix w = p.at(lora_lab::ModelParams::layer_name(layer, lora_lab::target_weight_suffix(t))).value;
    const auto* lora = st.lora();
    if (lora && lora->targets.contains(t)) {
        const Matrix& a = st.tensors.at(lora_lab::AdaptationState::lora_a_name(layer, t)).value;
        const Matrix& b = st.tensors.at(lora_lab::AdaptationState::lora_b_name(layer, t)).value;
        const Matrix ba = oracle::matmul(b, a);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] += lora->scale() * ba.data()[i];
    }
    return w;
}

/// Logits of one sequence computed frame by frame with plain loops.
inline std::vector<double> logits(const lora_lab::ModelConfig& cfg, const lora_lab::ModelParams& p,
                                  const lora_lab::AdaptationState& st, const Matrix& seq) {
    using lora_lab::ModelParams;
    using lora_lab::Target;
    const std::size_t L = seq.rows();
    const std::size_t d = cfg.d_model;
    const std::size_t dh = cfg.head_dim();
    std::vector<std::vector<double>> x(L);
    for (std::size_t t = 0; t < L; ++t) x[t].assign(seq.row(t).begin(), seq.row(t).end());

    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        auto P = [&](const char* s) -> const Matrix& { return p.at(ModelParams::layer_name(l, s)).value; };
        const Matrix wq = effective_weight(p, st, l, Target::Q);
        const Matrix wk = effective_weight(p, st, l, Target::K);
        const Matrix wv = effective_weight(p, st, l, Target::V);
        std::vector<std::vector<double>> q(L), k(L), v(L);
        for (std::size_t t = 0; t < L; ++t) {
            const auto h = oracle::layer_norm(x[t], P("ln1.gamma"), P("ln1.beta"));
            q[t] = linear(h, wq, P("attn.b_q"));
            k[t] = linear(h, wk, P("attn.b_k"));
            v[t] = linear(h, wv, P("attn.b_v"));
        }
        std::vector<std::vector<double>> ctx(L, std::vector<double>(d, 0.0));
        for (std::size_t hd = 0; hd < cfg.n_heads; ++hd) {
            for (std::size_t i = 0; i < L; ++i) {
                std::vector<double> s(L);
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < L; ++j) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < dh; ++c) dot += q[i][hd * dh + c] * k[j][hd * dh + c];
                    s[j] = dot / std::sqrt(static_cast<double>(dh));
                    mx = std::max(mx, s[j]);
                }
                double z = 0.0;
                for (double& e : s) z += (e = std::exp(e - mx));
                for (std::size_t j = 0; j < L; ++j)
                    for (std::size_t c = 0; c < dh; ++c) ctx[i][hd * dh + c] += s[j] / z * v[j][hd * dh + c];
            }
        }
        for (std::size_t t = 0; t < L; ++t) {
            const auto o = linear(ctx[t], P("attn.W_o"), P("attn.b_o"));
            for (std::size_t c = 0; c < d; ++c) x[t][c] += o[c];
            const auto h2 = oracle::layer_norm(x[t], P("ln2.gamma"), P("ln2.beta"));
            auto z1 = linear(h2, P("ffn.W_1"), P("ffn.b_1"));
            for (double& e : z1) e = std::max(0.0, e);
            const auto f = linear(z1, P("ffn.W_2"), P("ffn.b_2"));
            for (std::size_t c = 0; c < d; ++c) x[t][c] += f[c];
            if (st.adapter()) {
                auto A = [&](const char* s) -> const Matrix& {
                    return st.tensors.at(lora_lab::AdaptationState::adapter_name(l, s)).value;
                };
                auto a = linear(x[t], A("W_down"), A("b_down"));
                for (double& e : a) e = std::max(0.0, e);
                const auto u = linear(a, A("W_up"), A("b_up"));
                for (std::size_t c = 0; c < d; ++c) x[t][c] += u[c];
            }
        }
    }
    std::vector<double> pooled(d, 0.0);
    for (std::size_t t = 0; t < L; ++t)
        for (std::size_t c = 0; c < d; ++c) pooled[c] += x[t][c] / static_cast<double>(L);
    return linear(pooled, p.at(ModelParams::kHeadWeight).value, p.at(ModelParams::kHeadBias).value);
}

/// EER by direct counting at every threshold between adjacent distinct
/// scores (and beyond both ends), then linear interpolation of both rates
/// across the sign change of P_fa - P_miss.
inline double brute_force_eer(const std::vector<lora_lab::TrialScore>& scores) {
    std::set<double> distinct;
    for (const auto& s : scores) distinct.insert(s.score);
    std::vector<double> u(distinct.begin(), distinct.end());
    std::vector<double> thetas{u.front() - 1.0};
    for (std::size_t i = 0; i + 1 < u.size(); ++i) thetas.push_back(0.5 * (u[i] + u[i + 1]));
    thetas.push_back(u.back() + 1.0);

    auto rates = [&](double th) {
        double fa = 0, miss = 0, ns = 0, ng = 0;
        for (const auto& s : scores) {
            if (s.label == lora_lab::Label::Spoof) {
                ++ns;
                if (s.score > th) ++fa;
            } else {
                ++ng;
                if (s.score < th) ++miss;
            }
        }
        return std::pair{fa / ns, miss / ng};
    };
    auto [pf, pm] = rates(thetas[0]);
    if (pf <= pm) return pf;
    for (std::size_t i = 1; i < thetas.size(); ++i) {
        auto [f, m] = rates(thetas[i]);
        if (f == m) return f;
        if (f < m) {
            const double lam = (pf - pm) / ((pf - pm) - (f - m));
            return 0.5 * ((pf + lam * (f - pf)) + (pm + lam * (m - pm)));
        }
        pf = f;
        pm = m;
    }
    return pf;
}

}  // namespace oracle
