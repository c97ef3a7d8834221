#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "screloc/builder.hpp"
#include "screloc/errors.hpp"
#include "screloc/eval.hpp"
#include "screloc/library_store.hpp"
#include "screloc/match.hpp"
#include "screloc/world.hpp"

namespace {

using namespace screloc;

constexpr double kDegToRad = M_PI / 180.0;

/// Flags shared by the commands that simulate scans or extract descriptors.
struct CommonFlags {
  std::string world_path;
  std::string library_path;
  std::string out_path;
  std::uint64_t seed = 42;
  int k = 10;
  std::string linkage = "max";
  double threshold = 0.4;
  int knn = 30;
  int lsh_bits = 8;
  int lsh_tables = 4;
  double spacing = 0.25;
  int rows = 20;
  int cols = 60;
  double max_radius = 80.0;
  double footprint = 0.3;
  double height_offset = 0.5;
  double confidence_ratio = 1.2;
  int azimuths = 360;
  int channels = 16;
  double elev_min_deg = -15.0;
  double elev_max_deg = 15.0;
  double range = 80.0;
  double sensor_height = 0.5;
  unsigned threads = 0;
  std::string mode = "cascade";
};

void add_lidar_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--azimuths", f.azimuths, "Rays per revolution")->capture_default_str();
  cmd->add_option("--channels", f.channels, "Vertical channels")->capture_default_str();
  cmd->add_option("--elev-min", f.elev_min_deg, "Lowest beam elevation, degrees")
      ->capture_default_str();
  cmd->add_option("--elev-max", f.elev_max_deg, "Highest beam elevation, degrees")
      ->capture_default_str();
  cmd->add_option("--range", f.range, "Sensor range, meters")->capture_default_str();
  cmd->add_option("--sensor-height", f.sensor_height, "Sensor height above ground, meters")
      ->capture_default_str();
}

void add_descriptor_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--rows", f.rows, "Descriptor rings")->capture_default_str();
  cmd->add_option("--cols", f.cols, "Descriptor sectors")->capture_default_str();
  cmd->add_option("--max-radius", f.max_radius, "Descriptor radial coverage, meters")
      ->capture_default_str();
  cmd->add_option("--height-offset", f.height_offset, "Added to z before height clamping")
      ->capture_default_str();
  cmd->add_option("--confidence-ratio", f.confidence_ratio,
                  "Eigenvalue ratio gate for a usable principal axis")
      ->capture_default_str();
}

LidarModel lidar_from(const CommonFlags& f) {
  LidarModel m;
  m.n_azimuth = f.azimuths;
  m.n_channels = f.channels;
  m.elevation_min = f.elev_min_deg * kDegToRad;
  m.elevation_max = f.elev_max_deg * kDegToRad;
  m.max_range = f.range;
  m.sensor_height = f.sensor_height;
  return m;
}

DescriptorParams descriptor_from(const CommonFlags& f) {
  DescriptorParams p;
  p.rows = f.rows;
  p.cols = f.cols;
  p.max_radius = f.max_radius;
  p.height_offset = f.height_offset;
  p.confidence_ratio = f.confidence_ratio;
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

void print_match(const MatchResult& r) {
  std::printf("template id          %u\n", r.template_id);
  std::printf("position             x %.4f  y %.4f  yaw %.4f\n", r.position.x, r.position.y,
              r.position.yaw);
  std::printf("similarity           %.6f\n", r.similarity);
  std::printf("column shift         %d\n", r.best_shift);
  std::printf("candidates examined  %zu\n", r.candidates_examined);
  std::printf("retrieval ms         %.3f\n", r.timings.knn_search_ms);
  std::printf("scoring ms           %.3f\n", r.timings.cluster_match_ms);
}

int cmd_sample(const CommonFlags& f) {
  const World world = parse_world(read_file(f.world_path));
  const auto poses = sample_positions(world, f.spacing, f.footprint);
  save_pose_file(f.out_path, poses);
  std::printf("%zu poses -> %s\n", poses.size(), f.out_path.c_str());
  return 0;
}

int cmd_build(const CommonFlags& f, const std::string& pose_path) {
  const std::string world_text = read_file(f.world_path);
  const World world = parse_world(world_text);
  const auto poses = load_pose_file(pose_path);

  BuildParams params;
  params.lidar = lidar_from(f);
  params.descriptor = descriptor_from(f);
  params.knn = f.knn;
  params.linkage = parse_linkage(f.linkage);
  params.cluster_threshold = f.threshold;
  params.index.bits = f.lsh_bits;
  params.index.tables = f.lsh_tables;
  params.index.seed = f.seed;
  params.n_threads = f.threads;

  std::string current_stage = "setup";
  BuildStats stats;
  TemplateLibrary lib;
  try {
    lib = build_library(world, poses, params, &stats, [&](const std::string& label) {
      current_stage = label;
      std::fprintf(stderr, "[build] %s\n", label.c_str());
    });
    current_stage = "save";
    lib.provenance.world_hash = content_hash(world_text);
    lib.provenance.spacing = f.spacing;
    save_library(lib, f.out_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error during %s: %s\n", current_stage.c_str(), e.what());
    return 1;
  }

  std::printf("library              %s\n", f.out_path.c_str());
  std::printf("world hash           %016llx\n",
              static_cast<unsigned long long>(lib.provenance.world_hash));
  std::printf("templates            %zu (%zu with confident axis)\n", stats.n_templates,
              stats.n_confident);
  std::printf("clusters             %zu\n", stats.n_clusters);
  std::printf("graph edges          %zu\n", stats.graph_edges);
  std::printf("pair evaluations     %zu\n", stats.pair_evaluations);
  if (stats.lsh_pca_fallback)
    std::printf("note: too few representatives for data-driven bases; table 0 is random\n");
  std::printf("timings ms           scan %.0f  descriptors %.0f  graph %.0f  distances %.0f\n",
              stats.scan_ms, stats.descriptor_ms, stats.graph_ms, stats.distance_ms);
  std::printf("                     clustering %.0f  representatives %.0f  index %.0f\n",
              stats.cluster_ms, stats.representative_ms, stats.index_ms);
  std::printf("total ms             %.0f\n", stats.total_ms());
  return 0;
}

int cmd_match(const CommonFlags& f, const std::string& scan_path,
              const std::vector<double>& pose_vals) {
  const TemplateLibrary lib = load_library(f.library_path);
  const DescriptorParams params = lib.descriptor_params(f.height_offset, f.confidence_ratio);

  PointCloud cloud;
  if (!scan_path.empty()) {
    cloud = load_scan_file(scan_path);
  } else {
    if (f.world_path.empty() || pose_vals.size() != 3)
      throw ConfigError("match needs either --scan or both --world and --pose x y yaw");
    const World world = parse_world(read_file(f.world_path));
    const Pose2D pose{pose_vals[0], pose_vals[1], pose_vals[2]};
    cloud = raycast_scan(world, lidar_from(f), pose);
  }
  const Template query = make_query(cloud, params);

  const MatchContext ctx(lib, f.threads);
  MatchResult result;
  if (parse_match_mode(f.mode) == MatchMode::Cascade) {
    const CascadeIndex index(lib);
    result = cascade_match(lib, ctx, index, query, f.k);
  } else {
    result = exhaustive_match(lib, ctx, query);
  }
  print_match(result);
  return 0;
}

int cmd_eval(const CommonFlags& f, std::size_t n_queries) {
  const TemplateLibrary lib = load_library(f.library_path);
  const World world = parse_world(read_file(f.world_path));
  const DescriptorParams params = lib.descriptor_params(f.height_offset, f.confidence_ratio);

  const auto poses = sample_query_poses(world, n_queries, f.footprint, f.seed);
  const auto samples = make_query_samples(world, lidar_from(f), params, poses, f.threads);

  EvalParams ep;
  ep.mode = parse_match_mode(f.mode);
  ep.k = f.k;

  const MatchContext ctx(lib, f.threads);
  EvalReport report;
  if (ep.mode == MatchMode::Cascade) {
    const CascadeIndex index(lib);
    report = run_queries(lib, ctx, &index, samples, ep);
  } else {
    report = run_queries(lib, ctx, nullptr, samples, ep);
  }

  const std::string text = report.to_text();
  std::fputs(text.c_str(), stdout);
  if (!f.out_path.empty()) write_file(f.out_path, text);
  return 0;
}

int cmd_bench(const CommonFlags& f, BenchParams bench) {
  bench.k = f.k;
  bench.seed = f.seed;
  bench.index.bits = f.lsh_bits;
  bench.index.tables = f.lsh_tables;
  bench.index.seed = f.seed;
  const std::string csv = bench_csv(bench_sweep(bench));
  std::fputs(csv.c_str(), stdout);
  if (!f.out_path.empty()) write_file(f.out_path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scan-context re-localization: simulate, build, match, evaluate, benchmark"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string pose_path;
  std::string scan_path;
  std::vector<double> pose_vals;
  std::size_t n_queries = 1000;
  BenchParams bench;

  auto* sample = app.add_subcommand("sample", "Write a collision-free grid of poses");
  sample->add_option("--world", f.world_path, "World file")->required();
  sample->add_option("--spacing", f.spacing, "Grid spacing, meters")->capture_default_str();
  sample->add_option("--footprint", f.footprint, "Robot footprint radius, meters")
      ->capture_default_str();
  sample->add_option("--out", f.out_path, "Output pose file")->required();

  auto* build = app.add_subcommand("build", "Build a template library from world + poses");
  build->add_option("--world", f.world_path, "World file")->required();
  build->add_option("--poses", pose_path, "Pose file (x y yaw per line)")->required();
  build->add_option("--out", f.out_path, "Output library (.sctl)")->required();
  build->add_option("--knn", f.knn, "Connectivity neighbours per template")->capture_default_str();
  build->add_option("--linkage", f.linkage, "Cluster linkage: max | min | avg")
      ->capture_default_str();
  build->add_option("--threshold", f.threshold, "Cluster merge stop distance")
      ->capture_default_str();
  build->add_option("--lsh-bits", f.lsh_bits, "Hash bits per table")->capture_default_str();
  build->add_option("--lsh-tables", f.lsh_tables, "Hash tables")->capture_default_str();
  build->add_option("--seed", f.seed, "Random basis seed")->capture_default_str();
  build->add_option("--spacing", f.spacing, "Grid spacing the poses came from (metadata)")
      ->capture_default_str();
  build->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  add_lidar_flags(build, f);
  add_descriptor_flags(build, f);

  auto* match = app.add_subcommand("match", "Match one scan against a library");
  match->add_option("--library", f.library_path, "Library file (.sctl)")->required();
  match->add_option("--scan", scan_path, "Scan file (x y z per line)");
  match->add_option("--world", f.world_path, "World file (with --pose)");
  match->add_option("--pose", pose_vals, "Query pose: x y yaw")->expected(3);
  match->add_option("--k", f.k, "Candidate representatives")->capture_default_str();
  match->add_option("--mode", f.mode, "cascade | exhaustive")->capture_default_str();
  match->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  add_lidar_flags(match, f);
  match->add_option("--height-offset", f.height_offset, "Added to z before height clamping")
      ->capture_default_str();
  match->add_option("--confidence-ratio", f.confidence_ratio,
                    "Eigenvalue ratio gate for a usable principal axis")
      ->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Random-query success-rate report");
  eval->add_option("--library", f.library_path, "Library file (.sctl)")->required();
  eval->add_option("--world", f.world_path, "World file")->required();
  eval->add_option("--queries", n_queries, "Number of random queries")->capture_default_str();
  eval->add_option("--seed", f.seed, "Query sampling seed")->capture_default_str();
  eval->add_option("--k", f.k, "Candidate representatives (cascade)")->capture_default_str();
  eval->add_option("--mode", f.mode, "cascade | exhaustive")->capture_default_str();
  eval->add_option("--footprint", f.footprint, "Robot footprint radius, meters")
      ->capture_default_str();
  eval->add_option("--out", f.out_path, "Also write the report here");
  eval->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  add_lidar_flags(eval, f);
  eval->add_option("--height-offset", f.height_offset, "Added to z before height clamping")
      ->capture_default_str();
  eval->add_option("--confidence-ratio", f.confidence_ratio,
                   "Eigenvalue ratio gate for a usable principal axis")
      ->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "KD-tree vs hashed index query-time sweep");
  bench_cmd->add_option("--counts", bench.counts, "Vector counts")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--dims", bench.dims, "Vector dimensions")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--k", f.k, "Neighbours per query")->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repetitions per cell (median kept)")
      ->capture_default_str();
  bench_cmd->add_option("--queries-per-rep", bench.queries_per_rep,
                        "Queries averaged inside one repetition")
      ->capture_default_str();
  bench_cmd->add_option("--seed", f.seed, "Data seed")->capture_default_str();
  bench_cmd->add_option("--lsh-bits", f.lsh_bits, "Hash bits per table")->capture_default_str();
  bench_cmd->add_option("--lsh-tables", f.lsh_tables, "Hash tables")->capture_default_str();
  bench_cmd->add_option("--out", f.out_path, "Also write the CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return cmd_sample(f);
    if (build->parsed()) return cmd_build(f, pose_path);
    if (match->parsed()) return cmd_match(f, scan_path, pose_vals);
    if (eval->parsed()) return cmd_eval(f, n_queries);
    if (bench_cmd->parsed()) return cmd_bench(f, bench);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
