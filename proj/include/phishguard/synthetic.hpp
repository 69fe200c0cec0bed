#pragma once

#include <cstddef>
#include <cstdint>

#include "phishguard/corpus.hpp"

namespace phishguard::synthetic {

/// Seeded toy corpus: phishing emails stitched from cue-word phrases,
/// safe emails from everyday office templates. Both carry PII (names,
/// account numbers, phones, addresses) so the masking stage has work to do.
struct SyntheticSpec {
  std::size_t n = 2000;
  double safe_fraction = 0.60;
  std::uint64_t seed = 42;
};

/// Exactly round(n * safe_fraction) safe records; ids are "syn-00000".. in
/// generation order. Same spec, same bytes.
corpus::Dataset generate_corpus(const SyntheticSpec& spec);

}  // namespace phishguard::synthetic
