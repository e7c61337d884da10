// metrics.hpp -- onset+pitch transcription scoring: maximum-cardinality note
// matching with a distance-minimizing tie-break, and the P/R/F1 conventions.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vpt/midi.hpp"
#include "vpt/util.hpp"

namespace vpt {

struct MatchResult {
    std::vector<std::pair<int, int>> pairs;  // (ref index, est index), original indices
    std::vector<int> unmatched_ref, unmatched_est;
    double onset_tolerance = 0.1;
};

namespace metrics_detail {

// Per-pitch matching. Notes of one pitch live on a line, and any maximum
// matching can be uncrossed without losing feasibility or increasing total
// distance, so a non-crossing DP over the two sorted onset lists finds a
// maximum-cardinality, minimum-total-distance matching in O(m*n).
struct Cell {
    int count = 0;
    double dist = 0.0;
    // 0 = take pair, 1 = skip ref, 2 = skip est, -1 = end
    signed char move = -1;
};

inline bool better(int count_a, double dist_a, int count_b, double dist_b) {
    if (count_a != count_b) return count_a > count_b;
    return dist_a < dist_b;
}

inline void match_pitch(const std::vector<std::pair<double, int>>& ref,
                        const std::vector<std::pair<double, int>>& est, double tol,
                        std::vector<std::pair<int, int>>& pairs) {
    const std::size_t m = ref.size(), n = est.size();
    // dp[i][j]: best result for ref[i..m) x est[j..n)
    std::vector<Cell> dp((m + 1) * (n + 1));
    auto at = [&dp, n](std::size_t i, std::size_t j) -> Cell& { return dp[i * (n + 1) + j]; };

    for (std::size_t i = m + 1; i-- > 0;) {
        for (std::size_t j = n + 1; j-- > 0;) {
            if (i == m && j == n) continue;  // empty suffix: zero cell, move -1
            Cell best;
            best.count = -1;
            // preference order on exact ties: take > skip ref > skip est
            if (i < m && j < n && std::abs(ref[i].first - est[j].first) <= tol) {
                const Cell& rest = at(i + 1, j + 1);
                double d = std::abs(ref[i].first - est[j].first) + rest.dist;
                best = {rest.count + 1, d, 0};
            }
            if (i < m) {
                const Cell& rest = at(i + 1, j);
                if (best.count < 0 || better(rest.count, rest.dist, best.count, best.dist))
                    best = {rest.count, rest.dist, 1};
            }
            if (j < n) {
                const Cell& rest = at(i, j + 1);
                if (best.count < 0 || better(rest.count, rest.dist, best.count, best.dist))
                    best = {rest.count, rest.dist, 2};
            }
            at(i, j) = best;
        }
    }

    std::size_t i = 0, j = 0;
    while (i < m || j < n) {
        switch (at(i, j).move) {
            case 0:
                pairs.emplace_back(ref[i].second, est[j].second);
                ++i, ++j;
                break;
            case 1: ++i; break;
            case 2: ++j; break;
            default: fail("matching reconstruction walked off the table");
        }
    }
}

}  // namespace metrics_detail

// Pairs are admissible when pitches are equal and |onset difference| <= tol
// (inclusive). Among maximum-cardinality matchings the one with the smallest
// total onset distance is returned, deterministically.
inline MatchResult match_notes(const std::vector<NoteEvent>& ref,
                               const std::vector<NoteEvent>& est, double tol = 0.1) {
    if (tol < 0) fail("tolerance must be >= 0");
    MatchResult result;
    result.onset_tolerance = tol;

    // (onset, original index) per pitch, sorted by onset (stable on ties)
    std::array<std::vector<std::pair<double, int>>, kKeyCount> ref_by, est_by;
    auto bucket = [](const std::vector<NoteEvent>& notes, auto& by) {
        for (std::size_t i = 0; i < notes.size(); ++i) {
            const NoteEvent& n = notes[i];
            if (n.pitch < kPitchLow || n.pitch > kPitchHigh)
                fail("pitch ", n.pitch, " outside the piano range");
            by[static_cast<std::size_t>(key_index(n.pitch))].emplace_back(n.onset,
                                                                          static_cast<int>(i));
        }
        for (auto& v : by)
            std::stable_sort(v.begin(), v.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
    };
    bucket(ref, ref_by);
    bucket(est, est_by);

    for (int k = 0; k < kKeyCount; ++k)
        metrics_detail::match_pitch(ref_by[static_cast<std::size_t>(k)],
                                    est_by[static_cast<std::size_t>(k)], tol, result.pairs);
    std::sort(result.pairs.begin(), result.pairs.end());

    std::vector<bool> ref_used(ref.size(), false), est_used(est.size(), false);
    for (auto [r, e] : result.pairs) {
        ref_used[static_cast<std::size_t>(r)] = true;
        est_used[static_cast<std::size_t>(e)] = true;
    }
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (!ref_used[i]) result.unmatched_ref.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < est.size(); ++i)
        if (!est_used[i]) result.unmatched_est.push_back(static_cast<int>(i));
    return result;
}

struct Scores {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// P = matches/n_est, R = matches/n_ref, F1 = 2PR/(P+R). Empty-vs-empty scores
// (1,1,1); an empty side against a non-empty one scores 0; F1 = 0 when P+R=0.
inline Scores precision_recall_f1(std::size_t matched, std::size_t n_ref, std::size_t n_est) {
    if (matched > std::min(n_ref, n_est))
        fail("internal scoring inconsistency: ", matched, " matches for ", n_ref, " ref / ",
             n_est, " est notes");
    if (n_ref == 0 && n_est == 0) return {1.0, 1.0, 1.0};
    Scores s;
    s.precision = n_est == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(n_est);
    s.recall = n_ref == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(n_ref);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

inline Scores precision_recall_f1(const MatchResult& match, std::size_t n_ref,
                                  std::size_t n_est) {
    return precision_recall_f1(match.pairs.size(), n_ref, n_est);
}

}  // namespace vpt
