// minios: build guest apps, author FAT images, run one node, run a mesh.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "minios/fatimg.hpp"
#include "minios/gasm.hpp"
#include "minios/samples.hpp"
#include "minios/sim.hpp"

namespace fs = std::filesystem;
using namespace minios;

namespace {

enum Exit { kOk = 0, kUsage = 1, kBuild = 2, kPanic = 3 };

struct Failure {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kUsage, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  auto s = read_file(path);
  return {s.begin(), s.end()};
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{kUsage, "cannot write " + path};
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::uint64_t seed_or_env(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("MINIOS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Failure{kUsage, "MINIOS_SEED is not a number"};
    }
  }
  return 0;
}

syskern::Config load_config(const std::string& file, const std::vector<std::string>& sets) {
  syskern::Config cfg;
  if (!file.empty()) cfg = syskern::Config::parse(read_file(file));
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

// ------------------------------------------------------------------ build

int cmd_build(const std::vector<std::string>& sources, const std::string& outdir) {
  for (const auto& src : sources) {
    auto bin = gasm::build_app(gasm::AsmSource::from_text(read_file(src), src));
    fs::path out = fs::path(src).replace_extension(".app");
    if (!outdir.empty()) out = fs::path(outdir) / out.filename();
    auto bytes = bin.serialize();
    write_file(out.string(), {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
    std::cout << src << " -> " << out.string() << " (code " << bin.header.code_size << ", data "
              << bin.header.data_size << ", bss " << bin.header.bss_size << ", stack " << bin.header.min_stack
              << " words)\n";
  }
  return kOk;
}

// ------------------------------------------------------------------- mkfs

int cmd_mkfs(const std::string& image, const std::string& size, const std::vector<std::string>& files,
             bool samples_too, const std::string& label, bool fragment) {
  fatimg::ImageOptions opts;
  opts.size_bytes = fatimg::parse_size(size);
  if (!label.empty()) opts.volume_label = label;
  opts.fragment = fragment;
  fatimg::ImageBuilder b(opts);
  if (samples_too) {
    for (auto app : samples::apps()) b.add_file(samples::file_name(app), samples::build(app).serialize());
    b.add_file("README.TXT", samples::kReadme);
  }
  for (const auto& f : files) {
    // HOST[=NAME]; NAME defaults to the upper-cased base name
    auto eq = f.find('=');
    std::string host = f.substr(0, eq);
    std::string name;
    if (eq != std::string::npos) {
      name = f.substr(eq + 1);
    } else {
      name = fs::path(host).filename().string();
      for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    b.add_file(name, read_bytes(host));
  }
  auto bytes = b.build();
  write_file(image, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
  auto layout = fatimg::plan_layout(opts);
  std::cout << image << ": " << (layout.type == fatro::FatType::Fat12 ? "FAT12" : "FAT16") << ", "
            << layout.cluster_count << " clusters\n";
  return kOk;
}

// -------------------------------------------------------------------- run

// Serial console over stdio or one accepted TCP connection.
class Console {
 public:
  explicit Console(const std::string& spec) {
    if (spec == "stdio") return;
    if (spec.rfind("tcp:", 0) != 0) throw Failure{kUsage, "console must be stdio or tcp:<port>"};
    const int port = std::stoi(spec.substr(4));
    listen_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(listen_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_, 1) != 0)
      throw Failure{kUsage, "cannot listen on port " + std::to_string(port)};
    std::cerr << "waiting for console connection on 127.0.0.1:" << port << "\n";
    in_ = out_ = ::accept(listen_, nullptr, nullptr);
    if (in_ < 0) throw Failure{kUsage, "accept failed"};
  }
  ~Console() {
    if (in_ != 0) ::close(in_);
    if (listen_ >= 0) ::close(listen_);
  }

  // Non-blocking read; empty with eof() set once the peer closes.
  std::string poll_input(int timeout_ms) {
    if (eof_) return {};
    pollfd p{in_, POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return {};
    char buf[512];
    auto n = ::read(in_, buf, sizeof buf);
    if (n <= 0) {
      eof_ = true;
      return {};
    }
    return {buf, static_cast<std::size_t>(n)};
  }
  void write(std::string_view s) {
    if (s.empty()) return;
    if (out_ == 1) {
      std::cout << s << std::flush;
      return;
    }
    (void)!::write(out_, s.data(), s.size());
  }
  bool eof() const { return eof_; }

 private:
  int listen_ = -1;
  int in_ = 0;
  int out_ = 1;
  bool eof_ = false;
};

int finish_run(const std::string& transcript, const std::string& trace, bool panicked, const std::string& panic,
               const std::string& transcript_file, const std::string& trace_file, bool echo) {
  if (!transcript_file.empty()) write_file(transcript_file, transcript);
  if (echo) std::cout << transcript;
  if (!trace_file.empty()) write_file(trace_file, trace);
  if (panicked) {
    std::cerr << "KERNEL PANIC: " << panic << "\n";
    return kPanic;
  }
  return kOk;
}

int cmd_run_interactive(const std::vector<std::uint8_t>& image, const sim::RunOptions& opts,
                        const std::string& console_spec, const std::string& transcript_file,
                        const std::string& trace_file) {
  Console con(console_spec);
  kernel::Kernel k(opts.config, periph::BlockDevice(image), 0, opts.seed);
  std::size_t shown = 0;
  Tick eof_at = 0;
  for (Tick t = 1; opts.ticks == 0 || t <= opts.ticks; ++t) {
    auto in = con.poll_input(1);
    if (!in.empty()) k.input(in);
    if (con.eof() && eof_at == 0) eof_at = t;
    k.tick(t);
    if (t == 1 && opts.load) {
      if (auto err = k.load(*opts.load)) throw Failure{kUsage, "cannot load " + *opts.load + ": " + *err};
    }
    con.write(std::string_view(k.uart()).substr(shown));
    shown = k.uart().size();
    if (k.halted() || (eof_at != 0 && t >= eof_at + 1000)) break;
  }
  return finish_run(k.uart(), k.trace().text(), k.halted(), k.panic_message(), transcript_file, trace_file, false);
}

// ------------------------------------------------------------------- mesh

std::pair<mesh::NodeId, std::string> node_arg(const std::string& s) {
  auto sep = s.find_first_of("=:");
  if (sep == std::string::npos) throw Failure{kUsage, "expected ID=value: " + s};
  return {static_cast<mesh::NodeId>(std::stoul(s.substr(0, sep))), s.substr(sep + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MiniOS host tool: build guest apps, make FAT images, run nodes and meshes"};
  app.require_subcommand(1);

  std::vector<std::string> build_sources;
  std::string build_out;
  auto* build = app.add_subcommand("build", "Assemble .gs sources with the minilib prelude into .app files");
  build->add_option("sources", build_sources, "Guest assembly files")->required();
  build->add_option("-o,--out-dir", build_out, "Output directory (default: next to each source)");

  std::string mkfs_image, mkfs_size, mkfs_label;
  std::vector<std::string> mkfs_files;
  bool mkfs_samples = false, mkfs_fragment = false;
  auto* mkfs = app.add_subcommand("mkfs", "Write a FAT12/FAT16 image (type chosen by size)");
  mkfs->add_option("image", mkfs_image, "Output image path")->required();
  mkfs->add_option("size", mkfs_size, "Image size, e.g. 1M, 512K, 4194304")->required();
  mkfs->add_option("files", mkfs_files, "Files to place in the root, HOST[=NAME]");
  mkfs->add_flag("--samples", mkfs_samples, "Also add every shipped sample app and README.TXT");
  mkfs->add_option("--label", mkfs_label, "Volume label");
  mkfs->add_flag("--fragment", mkfs_fragment, "Scatter file clusters");

  std::string run_image, run_config, run_console = "stdio", run_script, run_transcript, run_trace, run_load;
  std::vector<std::string> run_sets;
  std::optional<std::uint64_t> run_seed;
  Tick run_ticks = 0;
  auto* run = app.add_subcommand("run", "Boot one node with the console attached");
  run->add_option("image", run_image, "FAT image")->required();
  run->add_option("-c,--config", run_config, "Config file (key=value lines)");
  run->add_option("--set", run_sets, "Config override key=value");
  run->add_option("--seed", run_seed, "Seed (default: $MINIOS_SEED, else 0)");
  run->add_option("--ticks", run_ticks, "Ticks to run (default: forever, or script end + 1000)");
  run->add_option("--console", run_console, "stdio or tcp:<port>");
  run->add_option("--script", run_script, "Console input file, lines \"@tick text\"");
  run->add_option("--transcript", run_transcript, "Write the serial transcript here");
  run->add_option("--trace", run_trace, "Write the event trace here");
  run->add_option("--load", run_load, "Start this app at boot");

  std::string mesh_topo, mesh_image, mesh_config, mesh_trace_dir, mesh_summary;
  std::vector<std::string> mesh_node_images, mesh_node_configs, mesh_sets, mesh_loads;
  std::optional<std::uint64_t> mesh_seed;
  Tick mesh_ticks = 10000;
  bool mesh_stop = false;
  auto* meshc = app.add_subcommand("mesh", "Run a lockstep mesh of nodes");
  meshc->add_option("topology", mesh_topo, "Topology file")->required();
  meshc->add_option("--image", mesh_image, "Image for every node (default: the standard sample image)");
  meshc->add_option("--node-image", mesh_node_images, "Per-node image ID=path");
  meshc->add_option("-c,--config", mesh_config, "Config file for every node");
  meshc->add_option("--node-config", mesh_node_configs, "Per-node config ID=path");
  meshc->add_option("--set", mesh_sets, "Override [ID:]key=value");
  meshc->add_option("--load", mesh_loads, "Start an app at boot, ID=NAME.APP");
  meshc->add_option("--seed", mesh_seed, "Seed (default: $MINIOS_SEED, else 0)");
  meshc->add_option("--ticks", mesh_ticks, "Ticks to run");
  meshc->add_flag("--stop-on-convergence", mesh_stop, "End the run at the convergence tick");
  meshc->add_option("--trace-dir", mesh_trace_dir, "Write node<ID>.trace files here");
  meshc->add_option("--summary", mesh_summary, "Also write the summary here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return cmd_build(build_sources, build_out);
    if (*mkfs) return cmd_mkfs(mkfs_image, mkfs_size, mkfs_files, mkfs_samples, mkfs_label, mkfs_fragment);

    if (*run) {
      sim::RunOptions opts;
      opts.config = load_config(run_config, run_sets);
      opts.seed = seed_or_env(run_seed);
      opts.ticks = run_ticks;
      if (!run_load.empty()) opts.load = run_load;
      auto image = read_bytes(run_image);
      // No script: a terminal or TCP console is interactive; piped stdin is read as a script.
      if (run_script.empty() && (run_console != "stdio" || ::isatty(0)))
        return cmd_run_interactive(image, opts, run_console, run_transcript, run_trace);
      opts.script = sim::parse_script(run_script.empty() ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                                         : read_file(run_script));
      auto r = sim::run_node(image, opts);
      return finish_run(r.transcript, r.trace, r.panicked, r.panic_message, run_transcript, run_trace,
                        run_transcript.empty());
    }

    if (*meshc) {
      const std::uint64_t seed = seed_or_env(mesh_seed);
      auto topo = mesh::Topology::parse(read_file(mesh_topo));
      std::vector<std::uint8_t> base_image = mesh_image.empty() ? samples::standard_image() : read_bytes(mesh_image);
      std::map<mesh::NodeId, std::string> img_paths, cfg_paths, loads;
      for (const auto& s : mesh_node_images) img_paths.insert(node_arg(s));
      for (const auto& s : mesh_node_configs) cfg_paths.insert(node_arg(s));
      for (const auto& s : mesh_loads) loads.insert(node_arg(s));
      std::map<mesh::NodeId, sim::MeshNodeSpec> specs;
      for (auto id : topo.nodes) {
        std::vector<std::string> sets;
        for (const auto& s : mesh_sets) {
          auto colon = s.find(':');
          auto eq = s.find('=');
          if (colon != std::string::npos && colon < eq) {
            if (static_cast<mesh::NodeId>(std::stoul(s.substr(0, colon))) == id) sets.push_back(s.substr(colon + 1));
          } else {
            sets.push_back(s);
          }
        }
        sim::MeshNodeSpec spec;
        try {
          spec.config = load_config(cfg_paths.contains(id) ? cfg_paths[id] : mesh_config, sets);
        } catch (const ConfigError& e) {
          throw ConfigError("node " + std::to_string(id) + ": " + e.what());
        }
        spec.image = img_paths.contains(id) ? read_bytes(img_paths[id]) : base_image;
        if (loads.contains(id)) spec.load = loads[id];
        specs[id] = std::move(spec);
      }
      sim::MeshSim m(std::move(topo), specs, seed);
      m.run(mesh_ticks, mesh_stop);
      if (!mesh_trace_dir.empty()) {
        fs::create_directories(mesh_trace_dir);
        for (const auto& [id, k] : m.nodes())
          write_file((fs::path(mesh_trace_dir) / ("node" + std::to_string(id) + ".trace")).string(), k->trace().text());
      }
      const auto summary = m.summary();
      std::cout << summary;
      if (!mesh_summary.empty()) write_file(mesh_summary, summary);
      for (const auto& [id, k] : m.nodes())
        if (k->halted()) {
          std::cerr << "node " << id << ": KERNEL PANIC: " << k->panic_message() << "\n";
          return kPanic;
        }
      return kOk;
    }
  } catch (const Failure& f) {
    std::cerr << "minios: " << f.message << "\n";
    return f.code;
  } catch (const gasm::AsmError& e) {
    std::cerr << e.what() << "\n";
    return kBuild;
  } catch (const fatimg::BuildError& e) {
    std::cerr << "mkfs: " << e.what() << "\n";
    return kBuild;
  } catch (const ConfigError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "minios: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
