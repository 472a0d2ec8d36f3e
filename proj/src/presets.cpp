#include "crn/presets.hpp"

namespace crn {

namespace {

int complex_index(const MonomialBasis& basis, const Exponent& e) {
  auto i = basis.index_of(e);
  if (!i) {
    throw ConfigError("preset complex is not in the basis");
  }
  return *i;
}

}  // namespace

Preset preset_m1() {
  const MonomialBasis basis(4, 2);  // A, P, cat, catA
  const int a_cat = complex_index(basis, {1, 0, 1, 0});
  const int cat_a = complex_index(basis, {0, 0, 0, 1});
  const int p_cat = complex_index(basis, {0, 1, 1, 0});
  const ReactionList reactions = {
      {a_cat, cat_a, 1.0}, {cat_a, a_cat, 1.0}, {cat_a, p_cat, 1.0}, {p_cat, cat_a, 1.0}};
  Preset p;
  p.name = "m1";
  p.model = assemble_model({"A", "P", "cat", "catA"}, basis, reactions);
  p.rates = RateRange{5e-2, 1.0};
  p.w = 6;
  p.tau = 1e-2;
  p.scheme = Scheme::active_columns;
  p.moieties = {{2, 3}, {0, 1, 3}};
  return p;
}

Preset preset_m20() {
  const MonomialBasis basis(6, 2);  // A, P, cat, catA, catI, catAI
  const int a_cat = complex_index(basis, {1, 0, 1, 0, 0, 0});
  const int cat_a = complex_index(basis, {0, 0, 0, 1, 0, 0});
  const int p_cat = complex_index(basis, {0, 1, 1, 0, 0, 0});
  const int cat = complex_index(basis, {0, 0, 1, 0, 0, 0});
  const int cat_i = complex_index(basis, {0, 0, 0, 0, 1, 0});
  const int cat_ai = complex_index(basis, {0, 0, 0, 0, 0, 1});
  const ReactionList reactions = {{a_cat, cat_a, 1.0}, {cat_a, a_cat, 1.0}, {cat_a, p_cat, 1.0},
                                  {p_cat, cat_a, 1.0}, {cat, cat_i, 1.0},   {cat_a, cat_ai, 1.0}};
  Preset p;
  p.name = "m20";
  p.model = assemble_model({"A", "P", "cat", "catA", "catI", "catAI"}, basis, reactions);
  p.rates = RateRange{5e-2, 1.0};
  p.w = 8;
  p.tau = 1e-2;
  p.scheme = Scheme::active_plus_zero;
  p.moieties = {{2, 3, 4, 5}, {0, 1, 3, 5}};
  return p;
}

Preset preset_vdv() {
  const MonomialBasis basis(4, 2);  // x1, x2, x3, x4
  const int x1 = complex_index(basis, {1, 0, 0, 0});
  const int x2 = complex_index(basis, {0, 1, 0, 0});
  const int x3 = complex_index(basis, {0, 0, 1, 0});
  const int x4 = complex_index(basis, {0, 0, 0, 1});
  const int two_x1 = complex_index(basis, {2, 0, 0, 0});
  const ReactionList reactions = {{two_x1, x2, 1e-3}, {x1, x3, 6.85e-3}, {x3, x4, 2.48e-3}};
  Preset p;
  p.name = "vdv";
  p.model = assemble_model({"x1", "x2", "x3", "x4"}, basis, reactions);
  p.w = 4;
  // Rates are O(1e-3); the default threshold of the other presets would erase every term.
  p.tau = 1e-4;
  p.scheme = Scheme::species_as_sources;
  return p;
}

std::vector<std::string> preset_names() { return {"m1", "m20", "vdv"}; }

Preset preset_by_name(const std::string& name) {
  if (name == "m1") {
    return preset_m1();
  }
  if (name == "m20") {
    return preset_m20();
  }
  if (name == "vdv") {
    return preset_vdv();
  }
  throw ConfigError("unknown preset '" + name + "' (expected m1, m20 or vdv)");
}

}  // namespace crn
