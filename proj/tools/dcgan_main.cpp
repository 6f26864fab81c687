// Copyright 2026 The lesion-dcgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: prepare, synth-data, train, sample, interpolate,
// gradcheck.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
// divergence, 4 gradient check failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcgan.hpp"

namespace {

namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kDiverged = 3,
  kGradCheckFailed = 4,
};

struct Flags {
  std::string data;
  std::string out;
  std::string checkpoint;
  std::uint64_t seed = 42;
  std::uint64_t iters = 15000;
  std::size_t batch_fake = 200;
  std::size_t batch_real = 200;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double alpha = dcgan::kLeakyAlpha;
  double noise_var = 0.5;
  double dropout = 0.5;
  std::size_t steps = 8;
  std::size_t cols = 8;
  std::size_t count = 64;
  std::string update_mode = "simultaneous";
};

std::string checkpoint_name(std::uint64_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checkpoint_%06llu.pgan",
                static_cast<unsigned long long>(iteration));
  return buf;
}

dcgan::GanConfig config_from_flags(const Flags& f) {
  dcgan::GanConfig c;
  c.seed = f.seed;
  c.iterations = f.iters;
  c.batch_fake = f.batch_fake;
  c.batch_real = f.batch_real;
  c.adam.lr = f.lr;
  c.adam.beta1 = f.beta1;
  c.adam.beta2 = f.beta2;
  c.alpha = f.alpha;
  c.noise_variance = f.noise_var;
  c.dropout = f.dropout;
  c.update_mode = dcgan::parse_update_mode(f.update_mode);
  c.validate();
  return c;
}

int run_prepare(const Flags& f) {
  const fs::path dir(f.data);
  const auto lesions = dcgan::load_lesion_index((dir / "lesions.csv").string());
  const auto ds = dcgan::build_dataset(dir, lesions);
  dcgan::save_dataset(ds, f.out);
  std::cout << "wrote " << ds.size() << " patches to " << f.out << "\n";
  return kOk;
}

int run_synth(const Flags& f) {
  const auto ds = dcgan::make_synthetic_dataset(f.count, f.seed);
  dcgan::save_dataset(ds, f.out);
  std::cout << "wrote " << ds.size() << " synthetic patches to " << f.out << "\n";
  return kOk;
}

int run_train(const Flags& f, bool resume) {
  const auto ds = dcgan::load_dataset(f.data);
  dcgan::GanConfig config;
  dcgan::TrainState state;
  if (resume) {
    const auto ck = dcgan::load_checkpoint(f.checkpoint);
    config = ck.config;
    config.iterations = f.iters;
    state = ck.state;
  } else {
    config = config_from_flags(f);
    state = dcgan::initial_state(config);
  }
  const fs::path out(f.out);
  fs::create_directories(out);
  dcgan::write_file((out / "config.json").string(),
                    dcgan::config_to_json(config).dump(2) + "\n");

  dcgan::TrainOptions opts;
  opts.write_checkpoint = [&](const dcgan::TrainState& s) {
    const std::string path = (out / checkpoint_name(s.iteration)).string();
    dcgan::save_checkpoint({config, s}, path);
    return path;
  };
  dcgan::TrainReport report;
  opts.on_iteration = [&](const dcgan::IterationRecord& r) {
    report.records.push_back(r);
    if ((r.iter + 1) % 100 == 0) {
      std::cerr << "iter " << r.iter + 1 << "/" << config.iterations
                << "  loss_d " << r.loss_d << "  loss_g " << r.loss_g
                << "  p_real " << r.p_real_mean << "  p_fake " << r.p_fake_mean << "\n";
    }
  };

  const std::string report_path = (out / "report.csv").string();
  try {
    dcgan::train(ds, config, state, opts);
  } catch (const dcgan::TrainingDiverged& e) {
    report.records.push_back(e.record);
    report.write_csv(report_path);
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "last good checkpoint: "
              << (e.last_checkpoint.empty() ? "(none)" : e.last_checkpoint) << "\n";
    return kDiverged;
  }
  report.write_csv(report_path);
  std::cout << "trained to iteration " << state.iteration << "; report " << report_path
            << "\n";
  return kOk;
}

int run_sample(const Flags& f) {
  const auto ck = dcgan::load_checkpoint(f.checkpoint);
  dcgan::RngStream rng = dcgan::RngStream::derive(f.seed, 0, dcgan::StreamTag::kSample);
  const auto net = dcgan::GeneratorNet::prepare(ck.state.theta_g, ck.config.arch);
  std::vector<dcgan::Tensor> images;
  for (std::size_t k = 0; k < f.count; ++k) {
    images.push_back(
        dcgan::generator_trace(net, dcgan::sample_z(rng, ck.config.arch.latent_dim)).output());
  }
  for (const auto& p : dcgan::export_grid(images, f.cols, f.out)) std::cout << p << "\n";
  return kOk;
}

int run_interpolate(const Flags& f) {
  const auto ck = dcgan::load_checkpoint(f.checkpoint);
  dcgan::RngStream rng = dcgan::RngStream::derive(f.seed, 0, dcgan::StreamTag::kSample, 1);
  const auto z1 = dcgan::sample_z(rng, ck.config.arch.latent_dim);
  const auto z2 = dcgan::sample_z(rng, ck.config.arch.latent_dim);
  const auto frames =
      dcgan::interpolation_strip(ck.state.theta_g, ck.config.arch, z1, z2, f.steps);
  for (const auto& p : dcgan::export_grid(frames, f.steps, f.out)) std::cout << p << "\n";
  return kOk;
}

int run_gradcheck(const Flags& f) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 5; ++s) seeds.push_back(f.seed + s);
  bool ok = true;
  for (const auto& r : dcgan::run_gradcheck_suite(seeds)) {
    std::printf("%-38s max_rel_error %.3e  (%zu entries)  %s\n", r.name.c_str(),
                r.max_rel_error, r.checked, r.passed() ? "ok" : "FAIL");
    ok = ok && r.passed();
  }
  return ok ? kOk : kGradCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCGAN for 16x16 three-channel lesion patches"};
  app.require_subcommand(1);
  Flags f;

  auto* prepare = app.add_subcommand("prepare", "Build a PXPD dataset from raw volumes");
  prepare->add_option("--data", f.data, "Directory with volumes and lesions.csv")->required();
  prepare->add_option("--out", f.out, "Output PXPD file")->required();

  auto* synth = app.add_subcommand("synth-data", "Write a synthetic PXPD dataset");
  synth->add_option("--count", f.count, "Number of patches (>= 1)")->required();
  synth->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", f.out, "Output PXPD file")->required();

  auto* train = app.add_subcommand("train", "Train the GAN and write report and checkpoints");
  train->add_option("--data", f.data, "PXPD dataset")->required();
  train->add_option("--out", f.out, "Output directory")->required();
  train->add_option("--checkpoint", f.checkpoint,
                    "Resume from this checkpoint (its stored config is used; --iters sets the total)");
  train->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  train->add_option("--iters", f.iters, "Total iterations")->capture_default_str();
  train->add_option("--batch-fake", f.batch_fake, "Fake images per batch (n)")
      ->capture_default_str();
  train->add_option("--batch-real", f.batch_real, "Real images per batch (m)")
      ->capture_default_str();
  train->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--beta1", f.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", f.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--alpha", f.alpha, "Leaky ReLU slope")->capture_default_str();
  train->add_option("--noise-var", f.noise_var, "Discriminator noise variance")
      ->capture_default_str();
  train->add_option("--dropout", f.dropout, "Dropout rate on pooled features")
      ->capture_default_str();
  train->add_option("--update-mode", f.update_mode, "Player update order")
      ->check(CLI::IsMember({"simultaneous", "alternating"}))
      ->capture_default_str();

  auto* sample = app.add_subcommand("sample", "Export a grid of generated patches");
  sample->add_option("--checkpoint", f.checkpoint, "PGAN checkpoint")->required();
  sample->add_option("--out", f.out, "Output path prefix")->required();
  sample->add_option("--count", f.count, "Number of samples")->capture_default_str();
  sample->add_option("--cols", f.cols, "Grid columns")->capture_default_str();
  sample->add_option("--seed", f.seed, "RNG seed for latent draws")->capture_default_str();

  auto* interp = app.add_subcommand("interpolate", "Export a latent interpolation strip");
  interp->add_option("--checkpoint", f.checkpoint, "PGAN checkpoint")->required();
  interp->add_option("--out", f.out, "Output path prefix")->required();
  interp->add_option("--steps", f.steps, "Frames including both endpoints")
      ->capture_default_str();
  interp->add_option("--seed", f.seed, "RNG seed for the two endpoints")
      ->capture_default_str();

  auto* gradcheck = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  gradcheck->add_option("--seed", f.seed, "First of five seeds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*prepare) return run_prepare(f);
    if (*synth) return run_synth(f);
    if (*train) return run_train(f, !f.checkpoint.empty());
    if (*sample) return run_sample(f);
    if (*interp) return run_interpolate(f);
    if (*gradcheck) return run_gradcheck(f);
  } catch (const dcgan::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const dcgan::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const dcgan::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const dcgan::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
