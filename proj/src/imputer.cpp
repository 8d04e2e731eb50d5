#include "md2i/imputer.hpp"

#include <cmath>
#include <stdexcept>

namespace md2i {

int latent_width(int d) {
    if (d < 2) throw std::invalid_argument("latent_width: d must be >= 2");
    int w = static_cast<int>(std::floor(d / std::log(static_cast<double>(d))));
    return std::max(2, w);
}

GeneratorNet make_generator(int d, Rng& rng) {
    GeneratorNet g;
    g.d = d;
    g.code = latent_width(d);
    g.encoder = MlpNet({{2 * d, g.code, Activation::ReLU}}, rng);
    g.decoder = MlpNet({{g.code, d, Activation::Sigmoid}}, rng);
    return g;
}

DiscriminatorNet make_discriminator(int d, Rng& rng) {
    DiscriminatorNet disc;
    disc.d = d;
    int hidden = latent_width(d);
    disc.net = MlpNet({{2 * d, hidden, Activation::ReLU}, {hidden, d, Activation::Sigmoid}}, rng);
    return disc;
}

Matrix encode(GeneratorNet& g, const Matrix& xtilde, const Matrix& m) {
    if (!xtilde.same_shape(m)) throw std::invalid_argument("encode: shape mismatch");
    if (xtilde.cols != g.d) throw std::invalid_argument("encode: width differs from generator");
    return g.encoder.forward(hconcat(xtilde, m));
}

std::pair<Matrix, Matrix> generate(GeneratorNet& g, const Matrix& xtilde, const Matrix& m) {
    Matrix e = encode(g, xtilde, m);
    Matrix xbar = g.decoder.forward(e);
    return {std::move(xbar), std::move(e)};
}

Matrix impute(const Matrix& xtilde, const Matrix& m, const Matrix& xbar) {
    if (!xtilde.same_shape(m) || !xtilde.same_shape(xbar))
        throw std::invalid_argument("impute: shape mismatch");
    Matrix xhat(xtilde.rows, xtilde.cols);
    for (size_t k = 0; k < xhat.data.size(); ++k) {
        double mv = m.data[k];
        if (mv != 0.0 && mv != 1.0) throw std::invalid_argument("impute: mask entry not 0/1");
        xhat.data[k] = mv == 1.0 ? xtilde.data[k] : xbar.data[k];
    }
    return xhat;
}

Matrix hint_from_zh(const Matrix& m, const Matrix& zh) {
    if (!m.same_shape(zh)) throw std::invalid_argument("hint: shape mismatch");
    Matrix h(m.rows, m.cols);
    for (size_t k = 0; k < h.data.size(); ++k)
        h.data[k] = zh.data[k] * m.data[k] + kHintValue * (1.0 - zh.data[k]);
    return h;
}

Matrix sample_hint(const Matrix& m, Rng& rng) {
    Matrix h = m;
    for (int i = 0; i < m.rows; ++i) h(i, rng.uniform_int(m.cols)) = kHintValue;
    return h;
}

Matrix sample_hint(const Matrix& m, const HintConfig& cfg) {
    Rng rng(cfg.seed);
    return sample_hint(m, rng);
}

Matrix discriminate(DiscriminatorNet& d, const Matrix& xhat, const Matrix& h) {
    if (!xhat.same_shape(h)) throw std::invalid_argument("discriminate: shape mismatch");
    if (xhat.cols != d.d) throw std::invalid_argument("discriminate: width differs from net");
    return d.net.forward(hconcat(xhat, h));
}

double loss_rec(const Matrix& x, const Matrix& xpred, const Matrix& m,
                const std::vector<ColType>& col_types, Matrix* grad) {
    if (!x.same_shape(xpred) || !x.same_shape(m)) throw std::invalid_argument("loss_rec: shape mismatch");
    if (static_cast<int>(col_types.size()) != x.cols)
        throw std::invalid_argument("loss_rec: col_types size mismatch");
    if (grad) *grad = Matrix(x.rows, x.cols);
    double loss = 0.0;
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            if (m(i, j) == 0.0) continue;
            double xv = x(i, j), pv = xpred(i, j);
            if (col_types[j] == ColType::Continuous) {
                double diff = pv - xv;
                loss += diff * diff;
                if (grad) (*grad)(i, j) = 2.0 * diff;
            } else {
                loss -= xv * safe_log(pv);
                if (grad) (*grad)(i, j) = pv < kLogFloor ? 0.0 : -xv / pv;
            }
        }
    }
    return loss;
}

double loss_gen_adv(const Matrix& m, const Matrix& mhat, Matrix* grad) {
    if (!m.same_shape(mhat)) throw std::invalid_argument("loss_gen_adv: shape mismatch");
    if (grad) *grad = Matrix(m.rows, m.cols);
    double loss = 0.0;
    for (size_t k = 0; k < m.data.size(); ++k) {
        if (m.data[k] != 0.0) continue;
        double p = mhat.data[k];
        loss -= safe_log(p);
        if (grad) grad->data[k] = p < kLogFloor ? 0.0 : -1.0 / p;
    }
    return loss;
}

double loss_disc(const Matrix& m, const Matrix& mhat, const Matrix& h, DiscLossVariant variant,
                 Matrix* grad) {
    if (!m.same_shape(mhat) || !m.same_shape(h))
        throw std::invalid_argument("loss_disc: shape mismatch");
    if (grad) *grad = Matrix(m.rows, m.cols);
    double loss = 0.0;
    auto accumulate = [&](int i, int j) {
        double mv = m(i, j), p = mhat(i, j);
        loss -= mv * safe_log(p) + (1.0 - mv) * safe_log(1.0 - p);
        if (grad) {
            double g = 0.0;
            if (p >= kLogFloor) g -= mv / p;
            if (1.0 - p >= kLogFloor) g += (1.0 - mv) / (1.0 - p);
            (*grad)(i, j) = g;
        }
    };
    if (variant == DiscLossVariant::HintedEntries) {
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j)
                if (h(i, j) == kHintValue) accumulate(i, j);
    } else {
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j)
                if (m(i, j) == 0.0) accumulate(i, j);
    }
    return loss;
}

}  // namespace md2i
