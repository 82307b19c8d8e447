#include "doctest.h"

#include "core/technique.hpp"

using namespace dls;

TEST_CASE("technique names round-trip") {
  for (Technique t : kAllTechniques) {
    auto parsed = parse_technique(technique_name(t));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == t);
  }
  CHECK(parse_technique("NODLB") == Technique::nodlb);
}

TEST_CASE("technique parsing is lenient about case and separators") {
  CHECK(parse_technique("awf_b") == Technique::awf_b);
  CHECK(parse_technique("Awf-E") == Technique::awf_e);
  CHECK(parse_technique("mfsc") == Technique::mfsc);
  CHECK(parse_technique("static") == Technique::static_block);
  CHECK_FALSE(parse_technique("guided").has_value());
  CHECK_FALSE(parse_technique("").has_value());
}

TEST_CASE("technique families") {
  CHECK(is_awf_family(Technique::awf));
  CHECK(is_awf_family(Technique::awf_e));
  CHECK_FALSE(is_awf_family(Technique::af));
  CHECK(is_adaptive(Technique::af));
  CHECK_FALSE(is_adaptive(Technique::wf));
  CHECK(is_batched(Technique::wf));
  CHECK_FALSE(is_batched(Technique::gss));
  CHECK(is_static_split(Technique::nodlb));
  CHECK(valid_technique_names().find("AWF-C") != std::string::npos);
}
