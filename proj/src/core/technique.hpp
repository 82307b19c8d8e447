#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace dls {

/// Loop scheduling techniques. `nodlb` is the process-level name for a
/// one-shot equal split and follows the STATIC chunk rule.
enum class Technique {
  static_block,
  ss,
  fsc,
  mfsc,
  gss,
  tss,
  fac,
  wf,
  rand,
  awf,
  awf_b,
  awf_c,
  awf_d,
  awf_e,
  af,
  nodlb,
};

inline constexpr std::array<Technique, 15> kAllTechniques = {
    Technique::static_block, Technique::ss,    Technique::fsc,   Technique::mfsc,
    Technique::gss,          Technique::tss,   Technique::fac,   Technique::wf,
    Technique::rand,         Technique::awf,   Technique::awf_b, Technique::awf_c,
    Technique::awf_d,        Technique::awf_e, Technique::af};

std::string_view technique_name(Technique t) noexcept;

/// Case-insensitive; accepts both `AWF-B` and `AWF_B` spellings.
std::optional<Technique> parse_technique(std::string_view name);

/// Comma-separated list of every accepted name, for error messages.
std::string valid_technique_names();

bool is_awf_family(Technique t) noexcept;
bool is_adaptive(Technique t) noexcept;
/// FAC, WF, AWF family and AF all carve chunks out of half-remaining batches.
bool is_batched(Technique t) noexcept;
bool is_static_split(Technique t) noexcept;

}  // namespace dls
