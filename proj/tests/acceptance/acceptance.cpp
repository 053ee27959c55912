// One PASS/FAIL line per primary acceptance criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/error.hpp"
#include "bridgerole/geomodel.hpp"
#include "bridgerole/graphbuild.hpp"
#include "bridgerole/metapath.hpp"
#include "bridgerole/pipeline.hpp"
#include "bridgerole/rgcnvgae.hpp"
#include "bridgerole/synthetic.hpp"
#include "city.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bridgerole;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double elapsed = seconds_since(start);
  failures += out.pass ? 0 : 1;
  std::cout << (out.pass ? "PASS" : "FAIL") << "  " << name << "  (" << std::fixed << std::setprecision(2) << elapsed
            << " s)" << out.detail.str() << std::endl;
}

std::optional<pipeline::CitySnapshot> g_snapshot;

}  // namespace

int main() {
  criterion("gradient correctness", [](Outcome& o) {
    const auto start = Clock::now();
    const auto graph = fixture::eight_nodes();
    const auto x = fixture::gaussian(8, 21, 12);
    vgae::GradCheckOptions opts;
    const auto ok = vgae::grad_check(vgae::EncoderConfig{}, graph, x, opts);
    opts.corrupt_gradient = true;
    const auto bad = vgae::grad_check(vgae::EncoderConfig{}, graph, x, opts);
    const double t = seconds_since(start);
    o.detail << " max rel err " << std::scientific << std::setprecision(2) << ok.max_relative_error
             << " over " << ok.checked << " params, corrupted " << bad.max_relative_error << std::fixed;
    o.require(ok.max_relative_error < 1e-4, "error < 1e-4");
    o.require(bad.max_relative_error > 1e-2, "corrupted > 1e-2");
    o.require(t < 10.0, "runtime < 10 s");
  });

  criterion("training sanity", [](Outcome& o) {
    const auto start = Clock::now();
    vgae::EncoderConfig cfg;
    cfg.seed = 1;
    cfg.holdout_fraction = 0.1;
    const auto r = vgae::train(fixture::two_cliques(), fixture::gaussian(100, 21, 5), cfg);
    const double t = seconds_since(start);
    const auto& ep = r.report.epochs;
    const double auc = r.report.holdout_auc.value_or(0.0);
    o.detail << " epochs " << ep.size() << ", loss " << std::setprecision(3) << ep.front().total << " -> "
             << ep.back().total << ", holdout AUC " << auc;
    o.require(ep.back().total < ep.front().total, "final loss < first loss");
    o.require(vgae::beta_schedule(0) == 0.01 && vgae::beta_schedule(50) == 1.0 && vgae::beta_schedule(200) == 1.0,
              "beta endpoints");
    o.require(ep.front().beta == 0.01, "epoch 0 trained with beta 0.01");
    o.require(auc >= 0.85, "AUC >= 0.85");
    o.require(t < 60.0, "runtime < 60 s");
  });

  criterion("determinism", [](Outcome& o) {
    const auto cfg = fixture::city_config(fixture::scratch_dir("acceptance_city"));
    auto t0 = Clock::now();
    auto first = pipeline::run_pipeline(cfg);
    const double single = seconds_since(t0);
    t0 = Clock::now();
    const auto second = pipeline::run_pipeline(cfg);
    const bool same = first.content_hash == second.content_hash;
    const double check = seconds_since(t0);
    o.detail << " hash " << first.content_hash.substr(0, 16) << "..., single run " << std::setprecision(2) << single
             << " s, check " << check << " s";
    o.require(same, "identical content hashes");
    o.require(check < 2.0 * single, "check < 2x single run");
    g_snapshot = std::move(first);
  });

  criterion("classification oracle", [](Outcome& o) {
    const auto g = fixture::twelve_bridge_graph();
    const auto profiles = metapath::profile(g);
    const auto cls = metapath::classify_all(profiles);
    const auto& table = fixture::twelve_bridge_counts();
    o.require(profiles.size() == table.size(), "12 bridges");
    std::set<metapath::Category> seen;
    bool boundary = false;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < profiles.size() && i < table.size(); ++i) {
      const auto& p = profiles[i];
      const bool counts = p.shop_paths == table[i].shop && p.hospital_paths == table[i].hospital &&
                          p.residence_paths == table[i].residence;
      const bool label = cls[i].label() == oracle::classify(table[i].shop, table[i].hospital, table[i].residence);
      matched += counts && label;
      seen.insert(cls[i].category);
      boundary |= cls[i].category == metapath::Category::kSupplyChain && cls[i].confidence == 0.9;
    }
    std::size_t exhaustive = 0;
    std::size_t agree = 0;
    for (std::uint32_t s = 0; s <= 10; ++s) {
      for (std::uint32_t h = 0; h <= 10; ++h) {
        for (std::uint32_t r = 0; r <= 10; ++r) {
          metapath::MetapathProfile p;
          p.shop_paths = s;
          p.hospital_paths = h;
          p.residence_paths = r;
          ++exhaustive;
          agree += metapath::classify(p).label() == oracle::classify(s, h, r);
        }
      }
    }
    o.detail << " " << matched << "/12 bridges match, " << seen.size() << "/5 categories, rule table " << agree << "/"
             << exhaustive;
    o.require(matched == 12, "all bridges match the oracle");
    o.require(seen.size() == 5, "every category present");
    o.require(boundary, "SupplyChain at confidence exactly 0.9");
    o.require(agree == exhaustive, "exhaustive rule table");
  });

  criterion("k-coverage monotonicity", [](Outcome& o) {
    const auto cfg = fixture::city_config(fixture::scratch_dir("acceptance_dense"), synthetic::dense_params());
    const auto built = pipeline::run_pipeline(cfg, {pipeline::Stage::kBuild, false});
    std::vector<graph::KnnParams> sweep;
    for (int k : {1, 3, 5, 10}) sweep.push_back({k, cfg.k_hospital, cfg.k_residence, cfg.radius_m});
    const auto rows = metapath::coverage_report(built.graph, sweep);
    bool non_decreasing = true;
    bool strict = false;
    o.detail << " supply totals";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      o.detail << " " << rows[i].totals[0];
      if (i > 0) {
        non_decreasing &= rows[i].totals[0] >= rows[i - 1].totals[0];
        strict |= rows[i].totals[0] > rows[i - 1].totals[0];
      }
    }
    o.require(non_decreasing, "non-decreasing");
    o.require(strict, "strictly increasing at least once");
  });

  criterion("clustering oracles", [](Outcome& o) {
    std::size_t compared = 0;
    std::size_t agreed = 0;
    for (std::uint64_t seed = 0; seed < 400 && compared < 100; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const auto n = static_cast<Eigen::Index>(5 + seed % 8);
      const int mcs = 2 + static_cast<int>(seed % 3);
      const int groups = 1 + static_cast<int>(seed % 3);
      Eigen::MatrixXd x(n, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int g = static_cast<int>(i % groups);
        x(i, 0) = 4.0 * g + u(rng);
        x(i, 1) = 3.0 * (g % 2) + u(rng);
      }
      if (!oracle::mst_weights_distinct(x, mcs)) continue;
      ++compared;
      agreed += oracle::same_partition(analysis::hdbscan(x, mcs).labels, oracle::hdbscan(x, mcs, mcs).labels);
    }

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.0, 10.0);
      const auto n = static_cast<Eigen::Index>(10 + 10 * seed);
      Eigen::MatrixXd x(n, 2);
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = u(rng);
        x(i, 1) = u(rng);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 4) - 1;
      }
      worst = std::max(worst, std::abs(analysis::silhouette(x, labels) - oracle::silhouette(x, labels)));
    }

    const auto chain = fixture::geometric_chain(148, 1.05);
    const auto noise = analysis::hdbscan(chain, analysis::hdbscan_min_cluster_size(148));
    const auto fallback = analysis::cluster_with_fallback(chain, 7);
    const auto adaptive = analysis::cluster_with_fallback(fixture::geometric_chain(258, 1.02), 7);

    o.detail << " hdbscan " << agreed << "/" << compared << ", silhouette max diff " << std::scientific
             << std::setprecision(1) << worst << std::fixed << ", all-noise n=148 -> "
             << analysis::to_string(fallback.method) << " K=" << fallback.k << ", n=258 -> "
             << analysis::to_string(adaptive.method) << " K=" << adaptive.k;
    o.require(compared >= 50 && agreed == compared, "hdbscan matches oracle");
    o.require(worst < 1e-9, "silhouette within 1e-9");
    o.require(noise.noise_count == 148, "fixture is all noise");
    o.require(fallback.method == analysis::ClusterMethod::kKmeansFallback && fallback.k == 2, "fallback K=2");
    o.require(adaptive.method == analysis::ClusterMethod::kKmeansAdaptive && adaptive.k == 8, "adaptive K=8");
  });

  criterion("correlation scan", [](Outcome& o) {
    const Eigen::Index n = 300;
    Eigen::MatrixXd emb = fixture::gaussian(n, 32, 31);
    std::mt19937_64 rng(32);
    std::vector<double> highway(static_cast<std::size_t>(n));
    for (auto& h : highway) h = static_cast<double>(rng() % 9);
    for (Eigen::Index i = 0; i < n; ++i) emb(i, 19) = highway[static_cast<std::size_t>(i)];
    const auto rows = analysis::latent_correlation_scan(emb, highway);

    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const std::size_t m = 3 + static_cast<std::size_t>(rng() % 40);
      const bool ties = t % 2 == 0;
      std::vector<double> xs(m);
      std::vector<double> ys(m);
      std::normal_distribution<double> nd;
      do {
        for (std::size_t i = 0; i < m; ++i) {
          xs[i] = ties ? static_cast<double>(rng() % 5) : nd(rng);
          ys[i] = ties ? static_cast<double>(rng() % 4) : nd(rng) + 0.3 * xs[i];
        }
      } while (std::set<double>(xs.begin(), xs.end()).size() < 2 || std::set<double>(ys.begin(), ys.end()).size() < 2);
      worst = std::max(worst, std::abs(analysis::spearman(xs, ys).r - oracle::spearman(xs, ys)));
    }
    o.detail << " planted dim " << rows.front().dim << " r=" << std::setprecision(6) << rows.front().spearman_r
             << ", 100 random inputs max diff " << std::scientific << std::setprecision(1) << worst << std::fixed;
    o.require(rows.front().dim == 19 && rows.front().spearman_r == 1.0, "planted dimension ranks first with r=1");
    o.require(worst < 1e-12, "spearman within 1e-12");
  });

  criterion("geodesy", [](Outcome& o) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> d(-2.9, 2.9);
    double round_trip = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const geo::GeoPoint p{geo::kZone9Origin.lat + d(rng), geo::kZone9Origin.lon + d(rng)};
      const auto q = geo::unproject(geo::project(p));
      round_trip = std::max({round_trip, std::abs(q.lat - p.lat), std::abs(q.lon - p.lon)});
    }
    // Pairs within 50 km of the origin, separated by up to 5 km.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double distortion = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double r = 50'000.0 * std::sqrt(unit(rng));
      const double a = 2.0 * 3.14159265358979323846 * unit(rng);
      const auto p1 = fixture::offset(geo::kZone9Origin.lat, geo::kZone9Origin.lon, r * std::sin(a), r * std::cos(a));
      const double s = 5.0 + 4'995.0 * unit(rng);
      const double b = 2.0 * 3.14159265358979323846 * unit(rng);
      const auto p2 = fixture::offset(p1[0], p1[1], s * std::sin(b), s * std::cos(b));
      const geo::GeoPoint g1{p1[0], p1[1]};
      const geo::GeoPoint g2{p2[0], p2[1]};
      const double h = geo::haversine_m(g1, g2);
      if (h >= 5'000.0 || geo::haversine_m(geo::kZone9Origin, g1) > 50'000.0) continue;
      const double planar = geo::planar_distance_m(geo::project(g1), geo::project(g2));
      distortion = std::max(distortion, std::abs(planar - h) / h);
    }
    o.detail << " round trip max " << std::scientific << std::setprecision(1) << round_trip
             << " deg, distortion max " << distortion * 100.0 << " %" << std::fixed;
    o.require(round_trip < 1e-6, "round trip < 1e-6 deg");
    o.require(distortion < 1e-3, "distortion < 0.1%");
  });

  criterion("betweenness", [](Outcome& o) {
    std::size_t exact = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t n = 3 + seed % 10;
      const auto adj = fixture::random_graph(n, 0.25 + 0.03 * static_cast<double>(seed % 7), 1000 + seed);
      const auto got = graph::betweenness(fixture::street_graph(adj));
      const auto want = oracle::betweenness(adj);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < n; ++i) same = std::abs(got[i] - want[i]) <= 1e-12;
      exact += same;
    }
    o.detail << " " << exact << "/20 graphs match";
    o.require(exact == 20, "all graphs match the brute-force oracle");
  });

  criterion("format round-trips", [](Outcome& o) {
    if (!g_snapshot) throw std::runtime_error("no snapshot from the determinism run");
    const auto& s = *g_snapshot;
    const auto overlay = pipeline::parse_overlay(pipeline::overlay_geojson(s));
    std::size_t same = 0;
    for (std::size_t i = 0; i < overlay.size() && i < s.classifications.size(); ++i) {
      same += overlay[i].category == s.classifications[i].label() &&
              overlay[i].bridge_id == std::optional<graph::NodeId>(s.bridge_ids[i]);
    }
    std::istringstream csv(pipeline::classification_csv(s));
    std::string header;
    std::getline(csv, header);
    std::string expected;
    for (std::size_t i = 0; i < pipeline::kClassificationColumns.size(); ++i) {
      expected += (i ? "," : "") + std::string(pipeline::kClassificationColumns[i]);
    }
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) rows += !line.empty();
    o.detail << " overlay " << same << "/" << s.bridge_count() << " categories, CSV " << rows << " rows";
    o.require(overlay.size() == s.bridge_count() && same == s.bridge_count(), "overlay categories round-trip");
    o.require(header == expected, "CSV column order");
    o.require(rows == s.bridge_count(), "CSV row count");
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
