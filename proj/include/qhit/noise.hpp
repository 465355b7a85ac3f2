#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "qhit/interval_system.hpp"
#include "qhit/rational.hpp"
#include "qhit/rng.hpp"

namespace qhit {

enum class NoiseKind { bernoulli, markov };

// Driving measure over the symbol shift: Bernoulli (iid product weights) or a
// stationary Markov chain. Probabilities are exact rationals so that word
// enumeration feeds exact expectations.
class NoiseModel {
  public:
    static NoiseModel bernoulli(std::vector<Rational> weights);
    static NoiseModel markov(std::vector<std::vector<Rational>> transition,
                             std::optional<std::vector<Rational>> initial = std::nullopt);

    NoiseKind kind() const { return kind_; }
    bool is_bernoulli() const { return kind_ == NoiseKind::bernoulli; }
    int alphabet() const { return static_cast<int>(marginal_.size()); }

    // first-symbol marginal (Bernoulli weights, or the Markov stationary law)
    const std::vector<Rational>& marginal() const { return marginal_; }
    const std::vector<std::vector<Rational>>& transition() const { return transition_; }

    Word sample_word(std::size_t length, Stream& rng) const;
    Rational word_probability(const Word& word) const;

    // All words of the given length with exact probabilities, lexicographic.
    std::vector<std::pair<Word, Rational>> enumerate_words(std::size_t length,
                                                           std::size_t cap = std::size_t(1) << 20) const;

  private:
    NoiseModel() = default;

    NoiseKind kind_ = NoiseKind::bernoulli;
    std::vector<Rational> marginal_;
    std::vector<std::vector<Rational>> transition_;  // empty for bernoulli
    // cumulative double weights for sampling
    std::vector<double> marginal_cdf_;
    std::vector<std::vector<double>> transition_cdf_;
};

}  // namespace qhit
