#include "qhit/noise.hpp"

#include <stdexcept>

#include "qhit/cpd.hpp"  // ValidationError

namespace qhit {

namespace {

void check_probability_vector(const std::vector<Rational>& v, const char* what) {
    if (v.empty()) throw ValidationError(std::string(what) + " is empty");
    Rational sum(0);
    for (const auto& p : v) {
        if (p < 0 || p > 1) throw ValidationError(std::string(what) + " entry outside [0,1]");
        sum += p;
    }
    if (sum != 1) throw ValidationError(std::string(what) + " does not sum to 1");
}

std::vector<double> cdf_of(const std::vector<Rational>& v) {
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& p : v) {
        acc += to_double(p);
        cdf.push_back(acc);
    }
    cdf.back() = 1.0;
    return cdf;
}

int draw(const std::vector<double>& cdf, Stream& rng) {
    const double u = rng.uniform();
    for (std::size_t i = 0; i < cdf.size(); ++i)
        if (u < cdf[i]) return static_cast<int>(i);
    return static_cast<int>(cdf.size() - 1);
}

// Solve pi P = pi, sum pi = 1 exactly by Gaussian elimination.
std::vector<Rational> stationary_of(const std::vector<std::vector<Rational>>& P) {
    const std::size_t u = P.size();
    // unknowns pi_0..pi_{u-1}; equations (P^T - I) pi = 0 (drop one) + sum = 1
    std::vector<std::vector<Rational>> A(u, std::vector<Rational>(u + 1, Rational(0)));
    for (std::size_t row = 0; row + 1 < u; ++row) {
        for (std::size_t j = 0; j < u; ++j) A[row][j] = P[j][row];
        A[row][row] -= 1;
    }
    for (std::size_t j = 0; j < u; ++j) A[u - 1][j] = 1;
    A[u - 1][u] = 1;

    for (std::size_t col = 0, row = 0; col < u && row < u; ++col) {
        std::size_t pivot = row;
        while (pivot < u && A[pivot][col] == 0) ++pivot;
        if (pivot == u) continue;
        std::swap(A[pivot], A[row]);
        const Rational p = A[row][col];
        for (auto& e : A[row]) e /= p;
        for (std::size_t r = 0; r < u; ++r) {
            if (r == row || A[r][col] == 0) continue;
            const Rational f = A[r][col];
            for (std::size_t j = 0; j <= u; ++j) A[r][j] -= f * A[row][j];
        }
        ++row;
    }
    std::vector<Rational> pi(u);
    for (std::size_t i = 0; i < u; ++i) pi[i] = A[i][u];
    check_probability_vector(pi, "markov stationary distribution");
    return pi;
}

}  // namespace

NoiseModel NoiseModel::bernoulli(std::vector<Rational> weights) {
    check_probability_vector(weights, "bernoulli weights");
    NoiseModel m;
    m.kind_ = NoiseKind::bernoulli;
    m.marginal_ = std::move(weights);
    m.marginal_cdf_ = cdf_of(m.marginal_);
    return m;
}

NoiseModel NoiseModel::markov(std::vector<std::vector<Rational>> transition,
                              std::optional<std::vector<Rational>> initial) {
    const std::size_t u = transition.size();
    if (u == 0) throw ValidationError("markov transition matrix is empty");
    for (const auto& row : transition) {
        if (row.size() != u) throw ValidationError("markov transition matrix is not square");
        check_probability_vector(row, "markov transition row");
    }
    NoiseModel m;
    m.kind_ = NoiseKind::markov;
    if (initial) {
        check_probability_vector(*initial, "markov initial distribution");
        // must be the stationary vector: pi P = pi, exactly
        for (std::size_t j = 0; j < u; ++j) {
            Rational acc(0);
            for (std::size_t i = 0; i < u; ++i) acc += (*initial)[i] * transition[i][j];
            if (acc != (*initial)[j])
                throw ValidationError("markov initial distribution is not stationary");
        }
        m.marginal_ = std::move(*initial);
    } else {
        m.marginal_ = stationary_of(transition);
    }
    m.transition_ = std::move(transition);
    m.marginal_cdf_ = cdf_of(m.marginal_);
    for (const auto& row : m.transition_) m.transition_cdf_.push_back(cdf_of(row));
    return m;
}

Word NoiseModel::sample_word(std::size_t length, Stream& rng) const {
    Word w;
    w.symbols.reserve(length);
    if (length == 0) return w;
    if (kind_ == NoiseKind::bernoulli) {
        for (std::size_t i = 0; i < length; ++i) w.symbols.push_back(draw(marginal_cdf_, rng));
    } else {
        int cur = draw(marginal_cdf_, rng);
        w.symbols.push_back(cur);
        for (std::size_t i = 1; i < length; ++i) {
            cur = draw(transition_cdf_[static_cast<std::size_t>(cur)], rng);
            w.symbols.push_back(cur);
        }
    }
    return w;
}

Rational NoiseModel::word_probability(const Word& word) const {
    if (word.length() == 0) return Rational(1);
    Rational p = marginal_[static_cast<std::size_t>(word[0])];
    for (std::size_t i = 1; i < word.length(); ++i) {
        if (kind_ == NoiseKind::bernoulli)
            p *= marginal_[static_cast<std::size_t>(word[i])];
        else
            p *= transition_[static_cast<std::size_t>(word[i - 1])][static_cast<std::size_t>(word[i])];
    }
    return p;
}

std::vector<std::pair<Word, Rational>> NoiseModel::enumerate_words(std::size_t length,
                                                                   std::size_t cap) const {
    const std::size_t u = marginal_.size();
    double total = 1.0;
    for (std::size_t i = 0; i < length; ++i) {
        total *= static_cast<double>(u);
        if (total > static_cast<double>(cap))
            throw std::invalid_argument("word enumeration exceeds configured cap");
    }
    std::vector<std::pair<Word, Rational>> out;
    Word w;
    w.symbols.assign(length, 0);
    for (;;) {
        out.emplace_back(w, word_probability(w));
        // lexicographic increment
        std::size_t i = length;
        while (i > 0) {
            --i;
            if (w.symbols[i] + 1 < static_cast<int>(u)) {
                ++w.symbols[i];
                std::fill(w.symbols.begin() + static_cast<std::ptrdiff_t>(i) + 1, w.symbols.end(), 0);
                break;
            }
            if (i == 0) return out;
        }
        if (length == 0) return out;
    }
}

}  // namespace qhit
