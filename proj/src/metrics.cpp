#include "hypogen/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include "hypogen/errors.hpp"

namespace hypogen::metrics {

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

// n-gram -> count, keyed by the tokens joined with '\x1f'.
std::map<std::string, std::size_t> ngram_counts(const TokenSequence& tokens, int n) {
    std::map<std::string, std::size_t> counts;
    if (tokens.size() < static_cast<std::size_t>(n)) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int j = 1; j < n; ++j) {
            key += '\x1f';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

TokenSequence tokenize(std::string_view text) { return tokenize(text, {}); }

TokenSequence tokenize(std::string_view text, const TokenizeOptions& options) {
    TokenSequence tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            current += options.lowercase ? static_cast<char>(std::tolower(c))
                                         : static_cast<char>(c);
        } else {
            flush();
            if (options.punctuation_tokens && !std::isspace(c)) {
                tokens.emplace_back(1, static_cast<char>(c));
            }
        }
    }
    flush();
    return tokens;
}

std::vector<std::string> whitespace_split(std::string_view text) {
    std::vector<std::string> parts;
    std::string current;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!current.empty()) {
                parts.push_back(std::move(current));
                current.clear();
            }
        } else {
            current += static_cast<char>(c);
        }
    }
    if (!current.empty()) parts.push_back(std::move(current));
    return parts;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    if (a.empty() || b.empty()) return 0;
    // Two-row DP over |a| x |b|.
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                curr[j] = prev[j - 1] + 1;
            } else {
                curr[j] = std::max(prev[j], curr[j - 1]);
            }
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
    if (candidate.empty() || reference.empty()) {
        throw InvalidInput("rouge_l: empty candidate or reference");
    }
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    RougeScore s;
    s.precision = lcs / static_cast<double>(candidate.size());
    s.recall = lcs / static_cast<double>(reference.size());
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
    if (matched.size() < other.matched.size()) matched.resize(other.matched.size(), 0);
    if (total.size() < other.total.size()) total.resize(other.total.size(), 0);
    for (std::size_t i = 0; i < other.matched.size(); ++i) matched[i] += other.matched[i];
    for (std::size_t i = 0; i < other.total.size(); ++i) total[i] += other.total[i];
    candidate_len += other.candidate_len;
    reference_len += other.reference_len;
    return *this;
}

BleuStats bleu_stats(const TokenSequence& candidate,
                     const std::vector<TokenSequence>& references, int max_n) {
    if (max_n < 1) throw InvalidInput("bleu: max_n must be >= 1");
    if (references.empty()) throw InvalidInput("bleu: no references");
    for (const auto& ref : references) {
        if (ref.empty()) throw InvalidInput("bleu: empty reference");
    }

    BleuStats stats;
    stats.matched.assign(static_cast<std::size_t>(max_n), 0);
    stats.total.assign(static_cast<std::size_t>(max_n), 0);
    stats.candidate_len = candidate.size();

    // Effective reference length: closest to the candidate, shorter on ties.
    std::size_t best_len = references.front().size();
    for (const auto& ref : references) {
        const auto cur = ref.size();
        const auto cand = candidate.size();
        auto dist = [cand](std::size_t len) {
            return len > cand ? len - cand : cand - len;
        };
        if (dist(cur) < dist(best_len) || (dist(cur) == dist(best_len) && cur < best_len)) {
            best_len = cur;
        }
    }
    stats.reference_len = best_len;

    for (int n = 1; n <= max_n; ++n) {
        auto cand_counts = ngram_counts(candidate, n);
        if (cand_counts.empty()) continue;

        // Clip by the maximum count across references.
        std::map<std::string, std::size_t> max_ref;
        for (const auto& ref : references) {
            for (const auto& [gram, count] : ngram_counts(ref, n)) {
                auto& slot = max_ref[gram];
                slot = std::max(slot, count);
            }
        }
        std::size_t matched = 0;
        std::size_t total = 0;
        for (const auto& [gram, count] : cand_counts) {
            total += count;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) matched += std::min(count, it->second);
        }
        stats.matched[static_cast<std::size_t>(n - 1)] = matched;
        stats.total[static_cast<std::size_t>(n - 1)] = total;
    }
    return stats;
}

double bleu_from_stats(const BleuStats& stats, const BleuOptions& options) {
    if (stats.candidate_len == 0) return 0.0;

    double log_sum = 0.0;
    int orders = 0;
    for (std::size_t i = 0; i < stats.total.size(); ++i) {
        if (stats.total[i] == 0) continue;  // no n-grams of this order exist
        double matched = static_cast<double>(stats.matched[i]);
        double total = static_cast<double>(stats.total[i]);
        if (options.smooth && i >= 1) {
            matched += 1.0;
            total += 1.0;
        }
        if (matched == 0.0) return 0.0;
        log_sum += std::log(matched / total);
        ++orders;
    }
    if (orders == 0) return 0.0;

    const double c = static_cast<double>(stats.candidate_len);
    const double r = static_cast<double>(stats.reference_len);
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return 100.0 * bp * std::exp(log_sum / orders);
}

BleuResult bleu(const TokenSequence& candidate,
                const std::vector<TokenSequence>& references,
                const BleuOptions& options) {
    if (references.empty()) throw InvalidInput("bleu: no references");
    for (const auto& ref : references) {
        if (ref.empty()) throw InvalidInput("bleu: empty reference");
    }
    if (candidate.empty()) return {0.0, true};
    return {bleu_from_stats(bleu_stats(candidate, references, options.max_n), options), false};
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("pearson: length mismatch");
    if (x.size() < 2) throw InvalidInput("pearson: need at least two points");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw InvalidInput("pearson: non-finite value");
        }
    }
    const double n = static_cast<double>(x.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;

    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0) {
        throw InvalidInput("pearson: correlation undefined for a constant vector");
    }
    return cov / std::sqrt(var_x * var_y);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j share one value; each gets the mean of ranks i+1..j+1.
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("spearman: length mismatch");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

}  // namespace hypogen::metrics
