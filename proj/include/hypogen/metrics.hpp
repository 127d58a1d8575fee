#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hypogen::metrics {

/// Lowercased tokens: maximal alphanumeric runs, with every other printable
/// character emitted as its own single-character token. Bytes >= 0x80 are
/// treated as word characters so UTF-8 symbols stay inside their token.
using TokenSequence = std::vector<std::string>;

struct TokenizeOptions {
    bool lowercase = true;
    /// Emit punctuation as single-character tokens; when off, punctuation
    /// only separates words.
    bool punctuation_tokens = true;
};

TokenSequence tokenize(std::string_view text);
TokenSequence tokenize(std::string_view text, const TokenizeOptions& options);

/// Plain whitespace split (used by the corpus statement-length filter).
std::vector<std::string> whitespace_split(std::string_view text);

// ---------------------------------------------------------------------------
// Word-overlap metrics
// ---------------------------------------------------------------------------

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// ROUGE-L: P = LCS/|candidate|, R = LCS/|reference|, F1 = 2PR/(P+R)
/// (0 when P+R = 0). Throws InvalidInput on an empty side.
RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

struct BleuOptions {
    int max_n = 4;
    /// Add-one smoothing of n-gram precisions for n >= 2.
    bool smooth = true;
};

struct BleuResult {
    double score = 0.0;  // 0..100
    /// Set when the candidate was empty and the score is 0 by fiat.
    bool degenerate = false;
};

/// Accumulated modified-n-gram counts; sum these across segments for
/// corpus-level BLEU.
struct BleuStats {
    std::vector<std::size_t> matched;  // clipped matches per n (index 0 = unigram)
    std::vector<std::size_t> total;    // candidate n-gram totals per n
    std::size_t candidate_len = 0;
    std::size_t reference_len = 0;     // closest reference length (ties -> shorter)

    BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const TokenSequence& candidate,
                     const std::vector<TokenSequence>& references, int max_n = 4);

/// Combines stats into a 0-100 score: geometric mean of n-gram precisions
/// times the brevity penalty min(1, e^(1 - r/c)). Orders with no candidate
/// n-grams are left out of the mean.
double bleu_from_stats(const BleuStats& stats, const BleuOptions& options = {});

/// Sentence-level BLEU. Empty candidate scores 0 with the degenerate flag;
/// empty or absent references throw InvalidInput.
BleuResult bleu(const TokenSequence& candidate,
                const std::vector<TokenSequence>& references,
                const BleuOptions& options = {});

// ---------------------------------------------------------------------------
// Correlation statistics
// ---------------------------------------------------------------------------

/// Sample Pearson correlation. Throws InvalidInput on length mismatch,
/// fewer than two points, non-finite values, or a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);

/// Fractional ranks (1-based); ties receive the mean rank of their block.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation: Pearson over average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace hypogen::metrics
