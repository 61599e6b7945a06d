#include "stepprune/textdist.hpp"
#include "stepprune/util.hpp"

#include <algorithm>

namespace stepprune::textdist {

std::int64_t levenshtein_distance(std::string_view a, std::string_view b) {
  std::u32string ua = utf8_decode(a);
  std::u32string ub = utf8_decode(b);
  if (ua.size() < ub.size()) std::swap(ua, ub);  // ub is the shorter row

  const std::size_t n = ub.size();
  if (n == 0) return static_cast<std::int64_t>(ua.size());

  // Single-row DP over the shorter string.
  std::vector<std::int64_t> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = static_cast<std::int64_t>(j);

  for (std::size_t i = 1; i <= ua.size(); ++i) {
    std::int64_t diag = row[0];
    row[0] = static_cast<std::int64_t>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      std::int64_t next_diag = row[j];
      std::int64_t sub = diag + (ua[i - 1] == ub[j - 1] ? 0 : 1);
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
      diag = next_diag;
    }
  }
  return row[n];
}

double levenshtein_ratio(std::string_view a, std::string_view b) {
  std::size_t la = utf8_decode(a).size();
  std::size_t lb = utf8_decode(b).size();
  std::size_t longest = std::max(la, lb);
  if (longest == 0) return 1.0;  // both empty
  std::int64_t d = levenshtein_distance(a, b);
  return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

double levenshtein_ratio(std::string_view a, std::string_view b,
                         const TextNormalizer& normalize) {
  if (!normalize) return levenshtein_ratio(a, b);
  return levenshtein_ratio(normalize(a), normalize(b));
}

std::vector<TextPair> band_filter(const std::vector<TextPair>& pairs,
                                  const RatioBand& band) {
  band.validate();
  std::vector<TextPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (band.contains(levenshtein_ratio(p.first, p.second))) out.push_back(p);
  }
  return out;
}

}  // namespace stepprune::textdist
