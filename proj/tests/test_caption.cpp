#include <catch_amalgamated.hpp>

#include "structreward/caption.hpp"

using namespace structreward;

namespace {

StructuredCaption cup_fixture() {
  StructuredCaption c;
  c.objects = {{"cup_1", "cup", "red cup", 0}, {"cup_2", "cup", "cup", 1}};
  c.attributes = {{"cup_1", "red", 0}};
  c.events = {{"lift#1", "lift", {"cup_1"}, 2, 0}};
  c.normalize();
  return c;
}

}  // namespace

TEST_CASE("ingest of a minimal document") {
  const auto c = ingest_json(
      R"({"objects":[{"id":"cup_1","head":"cup","phrase":"cup","clause":0}]})");
  REQUIRE(c.objects.size() == 1);
  REQUIRE(c.objects[0].id == "cup_1");
  REQUIRE(c.attributes.empty());
  REQUIRE(validate(c).empty());
}

TEST_CASE("dangling attribute anchor is rejected") {
  const std::string doc =
      R"({"objects":[{"id":"cup_1","head":"cup","phrase":"cup","clause":0}],
          "attributes":[{"object":"cup_2","value":"red","clause":0}]})";
  REQUIRE_THROWS_AS(ingest_json(doc), DanglingAnchor);
}

TEST_CASE("duplicate object ids are rejected") {
  const std::string doc =
      R"({"objects":[{"id":"cup_1","head":"cup","phrase":"cup","clause":0},
                     {"id":"cup_1","head":"cup","phrase":"mug","clause":1}]})";
  REQUIRE_THROWS_AS(ingest_json(doc), DuplicateId);
}

TEST_CASE("malformed fields raise SchemaError") {
  REQUIRE_THROWS_AS(ingest_json("not json"), SchemaError);
  REQUIRE_THROWS_AS(ingest_json(R"({"objects":[{"id":"cup_1"}]})"), SchemaError);
  REQUIRE_THROWS_AS(ingest_json(R"({"objects":[{"id":"cup_1","head":"cup","phrase":"cup",
                                                "clause":"zero"}]})"),
                    SchemaError);
  REQUIRE_THROWS_AS(ingest_json(R"({"unknown_field":[]})"), SchemaError);
}

TEST_CASE("round trip preserves the fixture") {
  const auto c = cup_fixture();
  const auto bytes = serialize(c);
  const auto back = ingest_json(bytes);
  StructuredCaption expected = c;
  REQUIRE(back == expected);
}

TEST_CASE("serialization is canonical and idempotent") {
  StructuredCaption empty;
  const std::string canonical_empty = serialize(empty);
  REQUIRE(canonical_empty.find("\"objects\": []") != std::string::npos);

  // equal captions serialize byte-identically regardless of construction order
  StructuredCaption a, b;
  a.objects = {{"cup_1", "cup", "cup", 0}, {"table_1", "table", "table", 1}};
  b.objects = {{"table_1", "table", "table", 1}, {"cup_1", "cup", "cup", 0}};
  REQUIRE(serialize(a) == serialize(b));

  // serialize . ingest . serialize == serialize
  const auto c = cup_fixture();
  REQUIRE(serialize(ingest_json(serialize(c))) == serialize(c));
}

TEST_CASE("validate reports rule violations as data") {
  SECTION("valid fixture") { REQUIRE(validate(cup_fixture()).empty()); }

  SECTION("non-consecutive instance ids") {
    StructuredCaption c;
    c.objects = {{"cup_1", "cup", "cup", 0}, {"cup_3", "cup", "cup", 1}};
    const auto v = validate(c);
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].rule == "NonConsecutiveInstanceId");
  }

  SECTION("order_index must increase with clause") {
    StructuredCaption c;
    c.objects = {{"man_1", "man", "man", 0}};
    c.events = {{"sit#1", "sit", {"man_1"}, 1, 5}, {"stand#1", "stand", {"man_1"}, 2, 3}};
    bool found = false;
    for (const auto& v : validate(c)) found = found || v.rule == "OrderIndexViolation";
    REQUIRE(found);
  }

  SECTION("order assertion to itself") {
    StructuredCaption c;
    c.objects = {{"man_1", "man", "man", 0}};
    c.events = {{"sit#1", "sit", {"man_1"}, 1, 0}};
    c.orders = {{"sit#1", "sit#1", true}};
    bool found = false;
    for (const auto& v : validate(c)) found = found || v.rule == "SelfOrder";
    REQUIRE(found);
  }
}

TEST_CASE("ingest is all-or-nothing") {
  // anything that validates dirty must throw; clean ingest has no violations
  const std::string doc =
      R"({"objects":[{"id":"cup_1","head":"cup","phrase":"cup","clause":0},
                     {"id":"cup_3","head":"cup","phrase":"cup","clause":1}]})";
  REQUIRE_THROWS_AS(ingest_json(doc), InvariantViolation);
}

TEST_CASE("normalization dedups identical units") {
  StructuredCaption c;
  c.objects = {{"cup_1", "cup", "cup", 0}};
  c.attributes = {{"cup_1", "red", 0}, {"cup_1", "red", 0}, {"cup_1", "red", 1}};
  c.normalize();
  REQUIRE(c.attributes.size() == 2);  // exact-equality dedup only
}
