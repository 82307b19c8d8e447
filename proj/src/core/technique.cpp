#include "core/technique.hpp"

#include <algorithm>
#include <cctype>

namespace dls {

namespace {

struct NameEntry {
  Technique technique;
  std::string_view name;
};

constexpr NameEntry kNames[] = {
    {Technique::static_block, "STATIC"}, {Technique::ss, "SS"},
    {Technique::fsc, "FSC"},             {Technique::mfsc, "mFSC"},
    {Technique::gss, "GSS"},             {Technique::tss, "TSS"},
    {Technique::fac, "FAC"},             {Technique::wf, "WF"},
    {Technique::rand, "RAND"},           {Technique::awf, "AWF"},
    {Technique::awf_b, "AWF-B"},         {Technique::awf_c, "AWF-C"},
    {Technique::awf_d, "AWF-D"},         {Technique::awf_e, "AWF-E"},
    {Technique::af, "AF"},               {Technique::nodlb, "NODLB"},
};

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '_') c = '-';
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view technique_name(Technique t) noexcept {
  for (const auto& e : kNames)
    if (e.technique == t) return e.name;
  return "?";
}

std::optional<Technique> parse_technique(std::string_view name) {
  const std::string wanted = normalize(name);
  for (const auto& e : kNames)
    if (normalize(e.name) == wanted) return e.technique;
  return std::nullopt;
}

std::string valid_technique_names() {
  std::string out;
  for (const auto& e : kNames) {
    if (!out.empty()) out += ", ";
    out += e.name;
  }
  return out;
}

bool is_awf_family(Technique t) noexcept {
  switch (t) {
    case Technique::awf:
    case Technique::awf_b:
    case Technique::awf_c:
    case Technique::awf_d:
    case Technique::awf_e: return true;
    default: return false;
  }
}

bool is_adaptive(Technique t) noexcept { return is_awf_family(t) || t == Technique::af; }

bool is_batched(Technique t) noexcept {
  return t == Technique::fac || t == Technique::wf || is_adaptive(t);
}

bool is_static_split(Technique t) noexcept {
  return t == Technique::static_block || t == Technique::nodlb;
}

}  // namespace dls
