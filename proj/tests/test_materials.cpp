#include <catch2/catch_amalgamated.hpp>

#include "layersep/materials.hpp"
#include "layersep/detail/rng.hpp"
#include "test_helpers.hpp"

using namespace layersep;
using Catch::Approx;
namespace th = test_helpers;

TEST_CASE("bundled database mirrors the published table", "[materials][db]") {
  const auto db = load_material_db(th::data_file("materials_fig6.db"));

  REQUIRE(db.sheets.size() == 6);
  for (const auto& m : db.sheets) REQUIRE_NOTHROW(m.validate());

  CHECK(friction_coefficient(db.friction, "bag-paper", "bag-paper") == Approx(0.26));
  CHECK(friction_coefficient(db.friction, "white-coat-fabric", "white-coat-fabric") ==
        Approx(0.61));
  CHECK(friction_coefficient(db.friction, "pouch-plastic", "bag-paper") == Approx(0.36));

  CHECK(db.sheet("bag-paper").stiffness_index == Approx(0.957));
  CHECK(db.sheet("pouch-plastic").stiffness_index == Approx(0.544));
  CHECK(db.sheet("apron-plastic").stiffness_index == Approx(0.278));
  CHECK(db.sheet("white-coat-fabric").stiffness_index == Approx(0.38));
  CHECK(db.sheet("blue-coat-fabric").stiffness_index == Approx(0.291));

  // Measured coefficients are marked as such; table contacts are assumed.
  CHECK(db.friction.entry("bag-paper", "bag-paper").provenance == Provenance::Paper);
  CHECK(db.friction.entry("bag-paper", "lab-table").provenance == Provenance::Assumed);
}

TEST_CASE("friction lookup is symmetric in its arguments", "[materials][friction]") {
  const auto db = load_material_db(th::data_file("materials_fig6.db"));
  CHECK(friction_coefficient(db.friction, "pouch-plastic", "bag-paper") ==
        friction_coefficient(db.friction, "bag-paper", "pouch-plastic"));
  for (const auto& [key, entry] : db.friction.entries()) {
    CHECK(friction_coefficient(db.friction, key.first, key.second) ==
          friction_coefficient(db.friction, key.second, key.first));
  }
}

TEST_CASE("unknown pair error names both surfaces", "[materials][friction]") {
  const auto db = load_material_db(th::data_file("materials_fig6.db"));
  try {
    friction_coefficient(db.friction, "bag-paper", "unknown-surface");
    FAIL("expected UnknownPairError");
  } catch (const UnknownPairError& e) {
    CHECK(e.surface_a == "bag-paper");
    CHECK(e.surface_b == "unknown-surface");
    CHECK(std::string(e.what()).find("bag-paper") != std::string::npos);
    CHECK(std::string(e.what()).find("unknown-surface") != std::string::npos);
  }
}

TEST_CASE("database validation failures carry the offending line", "[materials][db]") {
  SECTION("negative friction coefficient") {
    const auto path = th::temp_file("bad_mu.db");
    th::write_text(path,
                   "[materials]\n"
                   "a, 1e9, 1e-4, 0.1, 0.5, a, a\n"
                   "[friction]\n"
                   "a, a, -0.1, paper\n");
    REQUIRE_THROWS_MATCHES(load_material_db(path), ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring(":4:") &&
                               Catch::Matchers::ContainsSubstring("mu must be > 0")));
  }
  SECTION("negative modulus") {
    const auto path = th::temp_file("bad_e.db");
    th::write_text(path, "[materials]\na, -1e9, 1e-4, 0.1, 0.5, a, a\n");
    REQUIRE_THROWS_MATCHES(load_material_db(path), ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("youngs_modulus")));
  }
  SECTION("duplicate material name") {
    const auto path = th::temp_file("dup.db");
    th::write_text(path,
                   "[materials]\n"
                   "a, 1e9, 1e-4, 0.1, 0.5, a, a\n"
                   "a, 2e9, 1e-4, 0.1, 0.5, a, a\n");
    REQUIRE_THROWS_MATCHES(
        load_material_db(path), ParseError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("duplicate")));
  }
  SECTION("duplicate friction pair, either order") {
    const auto path = th::temp_file("dup_pair.db");
    th::write_text(path,
                   "[friction]\n"
                   "a, b, 0.3, paper\n"
                   "b, a, 0.4, paper\n");
    REQUIRE_THROWS_AS(load_material_db(path), ParseError);
  }
  SECTION("bad provenance") {
    const auto path = th::temp_file("bad_prov.db");
    th::write_text(path, "[friction]\na, b, 0.3, guessed\n");
    REQUIRE_THROWS_MATCHES(
        load_material_db(path), ParseError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("provenance")));
  }
  SECTION("record before any section") {
    const auto path = th::temp_file("no_section.db");
    th::write_text(path, "a, 1e9, 1e-4, 0.1, 0.5, a, a\n");
    REQUIRE_THROWS_AS(load_material_db(path), ParseError);
  }
  SECTION("stiffness index out of range") {
    const auto path = th::temp_file("bad_stiff.db");
    th::write_text(path, "[materials]\na, 1e9, 1e-4, 0.1, 1.5, a, a\n");
    REQUIRE_THROWS_AS(load_material_db(path), ParseError);
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_material_db(th::temp_file("does_not_exist.db")), ParseError);
  }
}

TEST_CASE("second moment of area", "[materials][section]") {
  SECTION("closed form") {
    CHECK(second_moment_of_area(0.12, 0.001) == Approx(1.0e-11).epsilon(1e-12));
  }
  SECTION("rejects non-positive dimensions") {
    CHECK_THROWS_AS(second_moment_of_area(0.0, 0.001), ValidationError);
    CHECK_THROWS_AS(second_moment_of_area(0.1, -0.001), ValidationError);
  }
  SECTION("linear in width, cubic in thickness, exactly") {
    detail::Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
      const double w = 0.01 + rng.uniform01();
      const double h = 1e-5 + 1e-3 * rng.uniform01();
      const double base = second_moment_of_area(w, h);
      CHECK(second_moment_of_area(2.0 * w, h) == 2.0 * base);
      CHECK(second_moment_of_area(w, 2.0 * h) == 8.0 * base);
    }
  }
}

TEST_CASE("database round-trips through save and load", "[materials][db]") {
  const auto db = load_material_db(th::data_file("materials_fig6.db"));
  const auto path = th::temp_file("roundtrip.db");
  save_material_db(db, path);
  const auto again = load_material_db(path);
  CHECK(again == db);
}

TEST_CASE("friction table rejects bad entries", "[materials][friction]") {
  FrictionTable t;
  CHECK_THROWS_AS(t.insert("a", "b", 0.0), ValidationError);
  CHECK_THROWS_AS(t.insert("a", "b", -0.2), ValidationError);
  CHECK_THROWS_AS(t.insert("", "b", 0.2), ValidationError);
  t.insert("a", "b", 0.2);
  CHECK_THROWS_AS(t.insert("b", "a", 0.3), ValidationError);
  CHECK(t.contains("b", "a"));
}
