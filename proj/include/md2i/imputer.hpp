#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "md2i/dataset.hpp"
#include "md2i/matrix.hpp"
#include "md2i/nn.hpp"
#include "md2i/rng.hpp"

namespace md2i {

/// Encoding width rule: floor(d / ln d), never below 2.
int latent_width(int d);

/// Generator G = (Q, P). Q maps the 2d-wide [X~ || M] to the code E;
/// P maps E back to d columns through a sigmoid output.
struct GeneratorNet {
    MlpNet encoder;
    MlpNet decoder;
    int d = 0;
    int code = 0;
};

/// Discriminator over [X^ || H], sigmoid output per column: the predicted
/// probability that each entry was observed.
struct DiscriminatorNet {
    MlpNet net;
    int d = 0;
};

GeneratorNet make_generator(int d, Rng& rng);
DiscriminatorNet make_discriminator(int d, Rng& rng);

Matrix encode(GeneratorNet& g, const Matrix& xtilde, const Matrix& m);

/// Returns (xbar, e): imputations for every position plus the code.
std::pair<Matrix, Matrix> generate(GeneratorNet& g, const Matrix& xtilde, const Matrix& m);

/// xhat = m .* xtilde + (1-m) .* xbar. Throws unless m is exactly 0/1.
Matrix impute(const Matrix& xtilde, const Matrix& m, const Matrix& xbar);

inline constexpr double kHintValue = 0.5;

struct HintConfig {
    uint64_t seed = 0;
};

/// H = Zh .* M + 0.5 * (1 - Zh) for a given 0/1 matrix Zh.
Matrix hint_from_zh(const Matrix& m, const Matrix& zh);

/// Per row, hides one uniformly drawn column behind 0.5; all other columns
/// reveal the true mask.
Matrix sample_hint(const Matrix& m, Rng& rng);
Matrix sample_hint(const Matrix& m, const HintConfig& cfg);

Matrix discriminate(DiscriminatorNet& d, const Matrix& xhat, const Matrix& h);

/// Reconstruction loss over observed entries: squared error for continuous
/// columns, -x*log(xpred) for binary ones. Missing entries contribute 0.
/// grad, if given, receives d loss / d xpred.
double loss_rec(const Matrix& x, const Matrix& xpred, const Matrix& m,
                const std::vector<ColType>& col_types, Matrix* grad = nullptr);

/// Generator's adversarial term: -sum over missing entries of log(mhat).
double loss_gen_adv(const Matrix& m, const Matrix& mhat, Matrix* grad = nullptr);

enum class DiscLossVariant {
    HintedEntries,   // cross-entropy on the one hint-hidden column per row
    MissingEntries,  // cross-entropy restricted to entries with m = 0
};

/// Negated cross-entropy for the discriminator (minimized by D). The hint
/// matrix identifies the hidden column of each row for the default variant.
double loss_disc(const Matrix& m, const Matrix& mhat, const Matrix& h, DiscLossVariant variant,
                 Matrix* grad = nullptr);

}  // namespace md2i
