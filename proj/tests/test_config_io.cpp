#include <gtest/gtest.h>

#include "degenflow/config.hpp"
#include "degenflow/io.hpp"

using namespace degenflow;

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = config::parse("");
  EXPECT_EQ(c.params.p, 2.0);
  EXPECT_EQ(c.grid.nx, (std::vector<int>{33, 33}));
  EXPECT_EQ(c.data.initial, "constant");
  EXPECT_EQ(c.lemmas.p_values.size(), 5u);
  EXPECT_EQ(c.sweep.eps_values.size(), 4u);
  EXPECT_FALSE(c.hash.empty());
}

TEST(Config, ParsesEverySection) {
  const auto c = config::parse(R"(
# comment
[params]
p = 3
delta = 0.25
eps = 0.1
n = 3
[grid]
lower = -1, 0, 0
upper = 1
points = 9, 11, 13
t0 = 0.5
dt = 0.125
levels = 5
[data]
initial = linear
slope = 1, 2, 3
value = 0.5
source = smooth
mollify = yes
[solver]
max_iter = 7
abs_tol = 1e-8
fallback = false
[lemmas]
p_values = 2, 4
n_values = 2
samples = 500
seed = 42
negate = young_type
[estimates]
center = 0, 0.5, 0.5
radius = 0.25
h_multiples = 2, 1
refine = true
[sweep]
eps_values = 0.2, 0.1
slack = 0.2
)");
  EXPECT_EQ(c.params.n, 3);
  EXPECT_EQ(c.grid.lower, (std::vector<double>{-1, 0, 0}));
  EXPECT_EQ(c.grid.upper, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(c.grid.nx, (std::vector<int>{9, 11, 13}));
  EXPECT_EQ(c.grid.t0, 0.5);
  EXPECT_EQ(c.grid.nt, 5);
  EXPECT_EQ(c.data.slope, (std::vector<double>{1, 2, 3}));
  EXPECT_TRUE(c.data.mollify);
  EXPECT_EQ(c.newton.max_iter, 7);
  EXPECT_FALSE(c.newton.fallback);
  EXPECT_EQ(c.lemmas.seed, 42u);
  EXPECT_EQ(c.lemmas.samples, 500u);
  EXPECT_EQ(c.lemmas.negate, "young_type");
  ASSERT_TRUE(c.estimates.radius.has_value());
  EXPECT_EQ(*c.estimates.radius, 0.25);
  EXPECT_EQ((*c.estimates.center)[0], 0.0);
  EXPECT_TRUE(c.estimates.refine);
  EXPECT_EQ(c.sweep.slack, 0.2);
}

TEST(Config, RejectsMisconfiguration) {
  const std::vector<std::string> bad{
      "[params]\np = 3\nwat = 1\n",            // unknown key
      "[physics]\np = 3\n",                    // unknown section
      "p = 3\n",                               // key outside a section
      "[params]\np = 3\np = 4\n",              // duplicate key
      "[params]\np = three\n",                 // bad number
      "[params]\np = 3.0x\n",                  // trailing junk
      "[params]\np = 1.5\n",                   // p < 2
      "[params]\ndelta = 1\n",                 // delta outside (0, 1)
      "[grid]\npoints = 2\n",                  // too few points
      "[grid]\npoints = 9, 9, 9\n",            // wrong arity for n = 2
      "[data]\ninitial = wobbly\n",            // unknown profile
      "[data]\nsource = nope\n",               // unknown source
      "[data]\nmollify = maybe\n",             // bad boolean
      "[solver]\nmax_iter = 0\n",              // invalid settings
      "[estimates]\naxis = 2\n",               // axis out of range
      "[estimates]\ncenter = 0.5\n",           // center arity
      "[sweep]\neps_values = 0.1, 2\n",        // eps > 1
      "[params\np = 3\n",                      // syntax
  };
  for (const auto& text : bad) EXPECT_THROW((void)config::parse(text), Error) << text;
  EXPECT_THROW((void)config::parse("[params]\nwat = 1\n"), ConfigError);
  EXPECT_THROW((void)config::load("/nonexistent/path.ini"), ConfigError);
}

TEST(Config, HashTracksText) {
  EXPECT_EQ(config::parse("[params]\np = 3\n").hash, config::parse("[params]\np = 3\n").hash);
  EXPECT_NE(config::parse("[params]\np = 3\n").hash, config::parse("[params]\np = 4\n").hash);
}

TEST(Config, MakeProblemMatchesData) {
  const auto c = config::parse("[params]\np = 3\neps = 0.2\n[grid]\npoints = 9\nlevels = 3\n"
                               "[data]\ninitial = linear\nslope = 2, 1\nsource = constant\nvalue = 0.5\n");
  const auto spec = config::make_problem(c);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.params.eps, 0.2);
  const Vec x{0.25, 0.5};
  EXPECT_DOUBLE_EQ(spec.boundary(x, 0.0), 0.5 + 0.5 + 0.5);
  for (double v : spec.f.values) EXPECT_EQ(v, 0.5);
  const auto half = config::make_problem(c, c.grid, 0.1);
  EXPECT_EQ(half.params.eps, 0.1);
}

TEST(Config, RefinedGridAndDefaultCylinder) {
  const Grid g = Grid::box(2, 0.0, 2.0, 17, 0.0, 0.25, 5);
  const Grid r = config::refined(g);
  EXPECT_EQ(r.nx, (std::vector<int>{33, 33}));
  EXPECT_DOUBLE_EQ(r.spacing(0), g.spacing(0) / 2.0);
  EXPECT_EQ(r.nt, g.nt);
  const Cylinder q = config::default_cylinder(g, std::nullopt, std::nullopt, std::nullopt);
  EXPECT_DOUBLE_EQ(q.radius, 1.0);  // limited by both the box and sqrt(T)
  EXPECT_NO_THROW(q.check_inside(g));
}

TEST(Io, SnapshotRejectsMismatchAndTruncation) {
  const Grid g = Grid::box(2, 0.0, 1.0, 5, 0.0, 0.1, 3);
  ScalarField f(g);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 0.1 * static_cast<double>(i);
  const std::string buf = io::encode_snapshot(f);
  EXPECT_EQ(io::decode_snapshot(buf, g).values, f.values);
  EXPECT_THROW((void)io::decode_snapshot(buf.substr(0, buf.size() - 8), g), IoError);
  EXPECT_THROW((void)io::decode_snapshot(buf, Grid::box(2, 0.0, 1.0, 7, 0.0, 0.1, 3)), IoError);
  std::string corrupt = buf;
  corrupt[0] = 'X';
  EXPECT_THROW((void)io::decode_snapshot(corrupt, g), IoError);
  EXPECT_THROW((void)io::read_file("/nonexistent/u.dgfl"), IoError);
}

TEST(Io, FmtDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) EXPECT_EQ(std::stod(io::fmt_double(v)), v);
  EXPECT_EQ(io::fmt_double(0.025), "0.025");
}
