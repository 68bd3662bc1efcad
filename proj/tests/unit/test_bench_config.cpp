#include <gtest/gtest.h>

#include <functional>

#include "sizerforge/bench_config.hpp"
#include "sizerforge/error.hpp"
#include "sizerforge/template.hpp"
#include "support/fixtures.hpp"

using namespace sizerforge;

namespace {

const std::string kTelescopic = std::string(SIZERFORGE_FIXTURES_DIR) + "/telescopic_ota.yaml";

const char* kMinimal = R"(user_specs_metric: "gain > 10 AND power < 5"
variable:
  W_a_base: null
  W_b_base: null
W_values: [1, 2, 3]
width_scales:
  W_a: [W_a_base, 3]
params:
  L: 0.15
subckt_name: AMP
metrics: [gain, power]
subckt_template: |
  m1 a b c d nfet w={W_a} l={L}
  m2 a b c d nfet w={W_b_base} l={L}
testbench_template: |
  {ota_subckt}
  X1 {inst_pins} {subckt_name}
  .end
subckt_pins: [A, B]
extra_key: {nested: [1, 2]}
)";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  if (at != std::string::npos) s.replace(at, from.size(), to);
  return s;
}

}  // namespace

TEST(BenchConfig, TelescopicFixture) {
  const BenchmarkConfig c = load_config(kTelescopic);
  EXPECT_EQ(c.variables, (std::vector<std::string>{"W_tail_base", "W_diff_base", "W_casc_base", "W_load_base"}));
  EXPECT_EQ(c.w_values, (std::vector<double>{0.84, 1.05, 1.26, 1.47, 1.68, 1.89, 2.10, 2.31, 2.52}));
  EXPECT_EQ(c.subckt_name, "TELESCOPIC_OTA");
  EXPECT_EQ(c.full_grid_cardinality(), 6561u);
  EXPECT_EQ(c.spec.clauses.size(), 4u);
  EXPECT_DOUBLE_EQ(c.params.at("L"), 0.15);
  EXPECT_EQ(c.width_scales.size(), 4u);
  EXPECT_EQ(c.metrics, (std::vector<std::string>{"dc_gain_db", "ugbw", "power_dc", "fom"}));
  // Layout keys are carried, never interpreted.
  EXPECT_TRUE(c.passthrough.count("align_pdk_path"));
  EXPECT_TRUE(c.passthrough.count("base_metrics"));
}

TEST(BenchConfig, RenderScalesWidths) {
  const BenchmarkConfig c = load_config(kTelescopic);
  const Assignment a{{"W_tail_base", 0.84}, {"W_diff_base", 1.05}, {"W_casc_base", 1.26}, {"W_load_base", 2.52}};
  const auto widths = resolve_widths(c, a);
  EXPECT_DOUBLE_EQ(widths.at("W_diff"), 4 * 1.05);
  const RenderedDeck d = render_deck(c, a);
  EXPECT_NE(d.netlist_text.find("w=1.68 l=0.15"), std::string::npos);
  EXPECT_NE(d.testbench_text.find("w=4.2 l=0.15"), std::string::npos);
  EXPECT_NE(d.testbench_text.find("XOTA VBIASN VBIASNC VBIASP1 VBIASP2 VINN VINP VOUTN VOUTP VDD 0 TELESCOPIC_OTA"),
            std::string::npos);
  EXPECT_EQ(template_placeholders(d.testbench_text).size(), 0u);
  EXPECT_EQ(render_deck(c, a).testbench_text, d.testbench_text);
}

TEST(BenchConfig, MissingAssignment) {
  const BenchmarkConfig c = load_config(kTelescopic);
  EXPECT_EQ(code_of([&] { render_deck(c, {{"W_tail_base", 0.84}}); }), ErrorCode::MissingAssignment);
}

TEST(BenchConfig, SerializeRoundTrip) {
  for (const std::string& text : {sftest::read_file(kTelescopic), std::string(kMinimal)}) {
    const BenchmarkConfig a = parse_config(text, "x");
    const BenchmarkConfig b = parse_config(serialize_config(a), "x");
    EXPECT_EQ(a, b);
  }
}

TEST(BenchConfig, MinimalDocument) {
  const BenchmarkConfig c = parse_config(kMinimal, "mini");
  EXPECT_EQ(c.name, "mini");
  EXPECT_EQ(c.full_grid_cardinality(), 9u);
  EXPECT_TRUE(c.passthrough.count("extra_key"));
  const auto d = render_deck(c, {{"W_a_base", 2}, {"W_b_base", 3}});
  EXPECT_NE(d.netlist_text.find("w=6 l=0.15"), std::string::npos);
  EXPECT_NE(d.netlist_text.find("w=3 l=0.15"), std::string::npos);
  EXPECT_NE(d.testbench_text.find("X1 A B AMP"), std::string::npos);
}

TEST(BenchConfig, Errors) {
  const std::string m = kMinimal;
  EXPECT_EQ(code_of([&] { parse_config(replace(m, "W_values: [1, 2, 3]\n", ""), "x"); }), ErrorCode::MissingKey);
  EXPECT_EQ(code_of([&] { parse_config(replace(m, "[W_a_base, 3]", "[W_x_base, 3]"), "x"); }),
            ErrorCode::BadScaleRef);
  EXPECT_EQ(code_of([&] { parse_config(replace(m, "[1, 2, 3]", "[1, 3, 2]"), "x"); }), ErrorCode::NonMonotonicGrid);
  EXPECT_EQ(code_of([&] { parse_config(replace(m, "l={L}\n  m2", "l={LL}\n  m2"), "x"); }),
            ErrorCode::TemplateUnresolvable);
  EXPECT_EQ(code_of([&] { parse_config(replace(m, "gain > 10", "gain >> 10"), "x"); }), ErrorCode::SpecParseError);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.yaml"); }), ErrorCode::IoError);
}

TEST(Template, SlotsAndEscapes) {
  EXPECT_EQ(render_template("a {x} {{y}} {", {{"x", "1"}}), "a 1 {y} {");
  EXPECT_EQ(template_placeholders("{a} {{b}} {c_1} { d }"), (std::set<std::string>{"a", "c_1"}));
  EXPECT_EQ(code_of([] { render_template("{missing}", std::map<std::string, std::string>{}); }),
            ErrorCode::TemplateUnresolvable);
}
