// Acceptance suite. Prints one "PASS name: detail" or "FAIL name: detail"
// line per criterion and exits with the number of unexpected failures.
// Criteria listed with --known-failure still print FAIL but do not count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "CLI11.hpp"
#include "dmt/checkpoint.hpp"
#include "dmt/config.hpp"
#include "dmt/dataset.hpp"
#include "dmt/evalkit.hpp"
#include "dmt/histmatch.hpp"
#include "dmt/losses.hpp"
#include "dmt/nets.hpp"
#include "dmt/regions.hpp"
#include "dmt/synth.hpp"
#include "dmt/trainer.hpp"
#include "dmt/transfer.hpp"
#include "gradient_cases.hpp"

namespace fs = std::filesystem;
using namespace dmt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Collects named sub-checks; the first failures are kept for the report.
class Checklist {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failures_.push_back(what);
  }
  void expect_eq(double got, double want, const std::string& what) {
    std::ostringstream os;
    os << what << " (got " << got << ", want " << want << ")";
    expect(got == want, os.str());
  }
  void expect_near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os << what << " (got " << got << ", want " << want << ")";
    expect(std::abs(got - want) <= tol, os.str());
  }

  Outcome outcome(const std::string& summary) const {
    if (failures_.empty()) return {true, std::to_string(total_) + " checks, " + summary};
    std::string d = std::to_string(failures_.size()) + "/" + std::to_string(total_) + " failed: ";
    for (std::size_t i = 0; i < failures_.size() && i < 3; ++i) d += (i ? "; " : "") + failures_[i];
    return {false, d};
  }

 private:
  int total_ = 0;
  std::vector<std::string> failures_;
};

double v(const torch::Tensor& t) { return t.item<double>(); }

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

// --- loss identity suite -----------------------------------------------------

Outcome loss_identity_suite() {
  torch::manual_seed(11);
  Checklist c;
  auto img = [](double value) { return torch::full({1, 3, 8, 8}, value); };
  auto x = torch::rand({1, 3, 8, 8});

  c.expect_eq(v(reconstruction_loss(x, x.clone())), 0.0, "rec x_r == x");
  c.expect_eq(v(reconstruction_loss(img(0), img(1))), 1.0, "rec 0 vs 1");
  auto half = torch::zeros({1, 3, 8, 8});
  half.narrow(3, 0, 4).fill_(0.25);
  c.expect_eq(v(reconstruction_loss(img(0), half)), 0.125, "rec quarter on half");

  auto extractor = FeatureExtractor::random(3, 8);
  c.expect_eq(v(perceptual_loss(x, x.clone(), extractor)), 0.0, "per x_s == x");
  auto y = torch::rand({1, 3, 8, 8});
  c.expect_eq(v(perceptual_loss(x, y, extractor)), v(perceptual_loss(x, y, extractor)), "per repeatable");

  LossWeights w;
  auto face = synthesize_face(8, 4, false);
  auto regions = extract_cosmetic_regions(face.labels);
  c.expect_eq(v(makeup_loss(x, x.clone(), regions, w).total), 0.0, "mak x_s == x_y");
  CosmeticRegionSet empty{torch::zeros({8, 8}, torch::kUInt8), torch::zeros({8, 8}, torch::kUInt8),
                          torch::zeros({8, 8}, torch::kUInt8), torch::zeros({8, 8}, torch::kUInt8)};
  c.expect_eq(v(makeup_loss(x, y, empty, w).total), 0.0, "mak empty regions");

  auto i1 = torch::rand({1, 4, 2, 2}), m1 = torch::rand({1, 8});
  c.expect_eq(v(imr_loss(i1, i1.clone(), m1, m1.clone(), w).total), 0.0, "imr both pairs equal");
  LossWeights wm = w;
  wm.makeup = 1.0;
  c.expect_eq(v(imr_loss(i1, i1.clone(), m1, m1 + 0.5, wm).total), 0.5, "imr makeup offset 0.5");
  LossWeights wi = w;
  wi.identity = 0.0;
  c.expect_eq(v(imr_loss(i1, torch::rand({1, 4, 2, 2}), m1, m1 + 0.5, wi).total),
              v(imr_loss(i1, i1 + 3.0, m1, m1 + 0.5, wi).total), "imr lambda_i = 0");

  auto related = (torch::rand({1, 1, 8, 8}) > 0.5).to(torch::kFloat32);
  c.expect_eq(v(attention_loss(related, related.clone())), 0.0, "att M == M'");
  c.expect_eq(v(attention_loss(torch::zeros({1, 1, 8, 8}), torch::ones({1, 1, 8, 8}))), 1.0, "att 0 vs 1");
  c.expect_eq(v(attention_loss(torch::full({1, 1, 8, 8}, 0.5), related)), 0.5, "att 0.5 vs binary");

  auto s = [](double value) { return torch::full({1, 1, 4, 4}, value); };
  c.expect_eq(v(adversarial_loss_d(s(1), s(0), s(0))), 0.0, "adv_d optimum");
  c.expect_eq(v(adversarial_loss_d(s(0), s(1), s(1))), 3.0, "adv_d worst");
  c.expect_eq(v(adversarial_loss_d(s(0.5), s(0.5), s(0.5))), 0.75, "adv_d 0.5");
  c.expect_eq(v(adversarial_loss_g(s(1), s(1))), 0.0, "adv_g optimum");
  c.expect_eq(v(adversarial_loss_g(s(0), s(0))), 2.0, "adv_g worst");
  c.expect_eq(v(adversarial_loss_g(s(0.5), s(0.5))), 0.5, "adv_g 0.5");

  auto zero_code = torch::zeros({1, 8});
  c.expect_eq(v(kl_loss(zero_code, zero_code)), 0.0, "kl zero codes");
  auto unit2 = torch::zeros({1, 8});
  unit2.narrow(1, 0, 2).fill_(1.0);
  c.expect_eq(v(kl_loss(unit2, zero_code)), 1.0, "kl |m|^2 = 2");
  c.expect_eq(v(kl_loss(m1 * 2, zero_code)), 4 * v(kl_loss(m1, zero_code)), "kl homogeneity");

  c.expect_eq(v(tv_loss(torch::full({1, 1, 8, 8}, 0.3))), 0.0, "tv constant");
  auto stripes = torch::tensor({0.f, 1.f, 0.f, 1.f}).view({1, 1, 2, 2});
  c.expect_eq(v(tv_loss(stripes)), 1.0, "tv 2x2 stripes");
  // Multiples of 1/16 keep every partial sum exact, so the comparison is bitwise.
  auto m = torch::randint(0, 17, {1, 1, 8, 8}).to(torch::kFloat32) / 16.0f;
  c.expect_eq(v(tv_loss(m)), v(tv_loss(m.transpose(2, 3).contiguous())), "tv transpose");
  c.expect_eq(v(tv_loss(torch::rand({1, 1, 1, 1}))), 0.0, "tv 1x1");

  auto scalar = [](double value) { return torch::tensor(value); };
  LossTerms zero;
  zero.adv_d = scalar(0.7);
  zero.adv_g = zero.rec = zero.per = zero.att = zero.kl = zero.tv = scalar(0);
  zero.mak.face = zero.mak.brow = zero.mak.eye = zero.mak.lip = zero.mak.total = scalar(0);
  zero.imr.identity = zero.imr.makeup = zero.imr.total = scalar(0);
  auto o = total_losses(zero, w);
  c.expect_eq(v(o.generator), 0.0, "L_G all zero");
  c.expect_eq(v(o.discriminator), v(zero.adv_d), "L_D unchanged");

  LossTerms t = zero;
  t.adv_g = scalar(0.25);
  t.rec = scalar(0.5);
  t.per = t.att = t.kl = t.tv = scalar(3.0);
  LossWeights only_rec{1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  c.expect_eq(v(total_losses(t, only_rec).generator), 0.75, "L_G rec only");
  return c.outcome("every identity case exact");
}

// --- gradients -----------------------------------------------------------------

Outcome gradient_checks() {
  const auto start = std::chrono::steady_clock::now();
  auto checks = dmt::testing::run_gradient_checks();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Checklist c;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& check : checks) {
    c.expect(check.result.relative_error < 1e-3, check.name + " rel " + fmt(check.result.relative_error));
    if (check.result.relative_error >= worst) {
      worst = check.result.relative_error;
      worst_name = check.name;
    }
  }
  c.expect(seconds < 120.0, "runtime " + fmt(seconds) + " s");
  return c.outcome("worst " + worst_name + " rel " + fmt(worst, 3) + ", " + fmt(seconds, 3) + " s");
}

// --- histogram matching ------------------------------------------------------

/// Independent sorted-rank oracle in double arithmetic.
torch::Tensor rank_oracle(const torch::Tensor& src, const torch::Tensor& ref) {
  const auto ns = src.size(0), nr = ref.size(0);
  auto out = torch::empty_like(src);
  auto s_acc = src.accessor<float, 2>();
  auto r_acc = ref.accessor<float, 2>();
  auto o_acc = out.accessor<float, 2>();
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<std::pair<float, std::int64_t>> order;
    for (std::int64_t i = 0; i < ns; ++i) order.emplace_back(s_acc[i][ch], i);
    std::sort(order.begin(), order.end());
    std::vector<float> sorted_ref;
    for (std::int64_t i = 0; i < nr; ++i) sorted_ref.push_back(r_acc[i][ch]);
    std::sort(sorted_ref.begin(), sorted_ref.end());
    for (std::int64_t rank = 0; rank < ns; ++rank) {
      const double pos = ns == 1 ? (nr - 1) / 2.0 : static_cast<double>(rank) * (nr - 1) / (ns - 1);
      o_acc[order[rank].second][ch] = sorted_ref[static_cast<std::size_t>(std::floor(pos + 0.5))];
    }
  }
  return out;
}

torch::Tensor quantize8(const torch::Tensor& t) { return torch::round(t * 255.0f) / 255.0f; }

Outcome histogram_matching_oracle() {
  Checklist c;
  torch::manual_seed(2024);
  std::mt19937_64 rng(2024);
  int pairs = 0;
  double worst_multiset = 0.0;
  while (pairs < 100) {
    auto a = synthesize_face(64, rng() % 100000, rng() % 2);
    auto b = synthesize_face(64, rng() % 100000, rng() % 2);
    const Region region = kRegions[rng() % 4];
    auto ra = extract_cosmetic_regions(a.labels), rb = extract_cosmetic_regions(b.labels);
    auto src = gather_pixels(a.image, ra[region]);
    auto ref = gather_pixels(b.image, rb[region]);
    if (src.size() == 0 || ref.size() == 0) continue;
    ++pairs;
    const auto tag = "pair " + std::to_string(pairs) + " " + std::string(region_name(region));

    auto exact = match_histogram(src, ref);
    c.expect(torch::equal(exact.values, rank_oracle(src.values, ref.values)), tag + " oracle");

    PixelSet src8{quantize8(src.values)}, ref8{quantize8(ref.values)};
    c.expect(torch::equal(match_histogram(src8, ref8).values, match_histogram_binned(src8, ref8).values),
             tag + " binned 8-bit");

    // Sub-quantum jitter makes the values continuous.
    auto jitter = [](const torch::Tensor& t) {
      return (t + (torch::rand(t.sizes()) - 0.5f) * (0.98f / 255.0f)).clamp(0.0f, 1.0f);
    };
    PixelSet src_c{jitter(src.values)}, ref_c{jitter(ref.values)};
    auto exact_c = match_histogram(src_c, ref_c);
    c.expect(torch::equal(exact_c.values, rank_oracle(src_c.values, ref_c.values)), tag + " oracle continuous");
    auto binned_c = match_histogram_binned(src_c, ref_c);
    const double gap =
        v((std::get<0>(binned_c.values.sort(0)) - std::get<0>(exact_c.values.sort(0))).abs().max());
    worst_multiset = std::max(worst_multiset, gap);
    c.expect(gap <= 1.0 / 255 + 1e-6, tag + " binned multiset gap " + fmt(gap));

    auto gt = makeup_ground_truth(a.image, b.image, ra, rb);
    auto inside = (ra.face + ra.brow + ra.eye + ra.lip) > 0;
    auto outside = inside.logical_not().unsqueeze(0).expand_as(a.image.pixels);
    c.expect(torch::equal(gt.image.pixels.masked_select(outside), a.image.pixels.masked_select(outside)),
             tag + " ground truth outside regions");
  }
  return c.outcome("100 pairs match oracle, binned exact on 8-bit data, continuous multiset gap <= " + fmt(worst_multiset, 3));
}

// --- composition and scenarios -----------------------------------------------------

Model desk_model(std::uint64_t seed) {
  torch::manual_seed(seed);
  return Model(ArchSpec::desk(), seed);
}

bool same(const GeneratorOutput& a, const GeneratorOutput& b) {
  return torch::equal(a.composed, b.composed) && torch::equal(a.raw_face, b.raw_face) && torch::equal(a.mask, b.mask);
}

Outcome composition_identities() {
  Checklist c;
  auto model = desk_model(5);
  torch::NoGradGuard no_grad;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto x = synthesize_face(64, seed, seed % 2).image.pixels.unsqueeze(0);
    auto i = model.encode_identity(x);
    auto m = model.encode_makeup(synthesize_face(64, seed + 10, true).image.pixels.unsqueeze(0));
    auto zero = model.decode(i, m, x, {0.0});
    auto one = model.decode(i, m, x, {1.0});
    c.expect(torch::equal(zero.composed, x), "M=0 seed " + std::to_string(seed));
    c.expect(torch::equal(one.composed, one.raw_face), "M=1 seed " + std::to_string(seed));
  }
  auto half = compose(torch::ones({1, 3, 8, 8}), torch::full({1, 1, 8, 8}, 0.5), torch::zeros({1, 3, 8, 8}));
  c.expect(torch::equal(half, torch::full({1, 3, 8, 8}, 0.5)), "M=0.5 arithmetic");
  return c.outcome("bitwise");
}

Outcome scenario_degeneracies() {
  Checklist c;
  auto model = desk_model(6);
  for (std::uint64_t seed : {1, 2, 3}) {
    auto x = synthesize_face(64, seed, false).image;
    auto y = synthesize_face(64, seed + 50, true).image;
    const auto tag = " seed " + std::to_string(seed);
    c.expect(same(interpolated(model, x, y, 0.0), reconstruct(model, x)), "alpha=0 vs reconstruction" + tag);
    c.expect(same(interpolated(model, x, y, 1.0), pairwise(model, x, y)), "alpha=1 vs pairwise" + tag);
    std::vector<FaceImage> one{y};
    std::vector<double> w1{1.0};
    c.expect(same(hybrid(model, x, one, w1), pairwise(model, x, y)), "K=1 vs pairwise" + tag);
    std::vector<FaceImage> two{y, y};
    std::vector<double> w2{0.5, 0.5};
    c.expect(same(hybrid(model, x, two, w2), pairwise(model, x, y)), "K=2 duplicate vs pairwise" + tag);
  }
  return c.outcome("bitwise");
}

// --- schedule --------------------------------------------------------------------

Outcome lr_schedule() {
  Checklist c;
  TrainConfig config;  // lr 2e-4, 100 epochs, constant through 50
  const std::map<int, double> want{{1, 2e-4}, {50, 2e-4}, {51, 2e-4 * 49 / 50}, {75, 1e-4}, {100, 0.0}};
  std::string shown;
  for (const auto& [epoch, expected] : want) {
    const double got = learning_rate_at(config, epoch);
    c.expect_near(got, expected, 1e-15, "epoch " + std::to_string(epoch));
    shown += (shown.empty() ? "" : " ") + std::to_string(epoch) + ":" + fmt(got, 6);
  }
  return c.outcome(shown);
}

// --- pair sampling ------------------------------------------------------------------

Outcome pair_sampling_frequencies() {
  Checklist c;
  std::mt19937_64 rng(77);
  std::map<TransferCase, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto d = draw_pair(100, 140, rng);
    ++counts[classify_transfer(d.x_makeup, d.y_makeup)];
  }
  std::string shown;
  for (auto tc : {TransferCase::keep_bare, TransferCase::add_makeup, TransferCase::remove_makeup,
                  TransferCase::swap_makeup}) {
    const double f = static_cast<double>(counts[tc]) / n;
    c.expect(std::abs(f - 0.25) <= 0.02, std::string(case_name(tc)) + " " + fmt(f));
    shown += (shown.empty() ? "" : ", ") + std::string(case_name(tc)) + " " + fmt(f, 4);
  }
  return c.outcome(shown);
}

// --- metrics --------------------------------------------------------------------------

Outcome metric_correctness() {
  Checklist c;
  torch::manual_seed(21);
  c.expect_eq(psnr_from_mse(0.01), 20.0, "psnr(mse=0.01)");
  auto a = torch::rand({3, 32, 32});
  auto b = (a + 0.1 * torch::randn({3, 32, 32})).clamp(0, 1);
  c.expect_near(ssim(a, a), 1.0, 1e-12, "ssim(a,a)");
  c.expect_near(ssim(a, b), ssim(b, a), 1e-12, "ssim symmetry");
  c.expect_eq(psnr(a, b), psnr(b, a), "psnr symmetry");
  c.expect_eq(mse(a, b), mse(b, a), "mse symmetry");
  c.expect_eq(psnr(a, a), kPsnrCap, "psnr identical capped");

  std::vector<std::pair<FaceImage, FaceImage>> pairs;
  for (std::uint64_t s = 0; s < 4; ++s) {
    pairs.emplace_back(synthesize_face(64, s, false).image, synthesize_face(64, s + 9, true).image);
  }
  auto report = reconstruction_benchmark(pairs, [](const FaceImage& f) { return f.pixels.clone(); });
  c.expect_eq(report.mean_mse, 0.0, "identity benchmark mse");
  c.expect_near(report.mean_ssim, 1.0, 1e-12, "identity benchmark ssim");
  c.expect_eq(static_cast<double>(report.images.size()), 8.0, "benchmark rows");
  return c.outcome("psnr(0.01) = " + fmt(psnr_from_mse(0.01), 17) + ", identity ssim " + fmt(report.mean_ssim, 17));
}

// --- toy training smoke and checkpoint determinism ---------------------------------

struct SmokeResults {
  Outcome rec, attention, heldout_ssim, diversity, determinism;
};

SmokeResults run_smoke(const fs::path& work, std::int64_t steps) {
  SmokeResults r;
  const auto data = work / "data";
  fs::remove_all(work);
  fs::create_directories(work);
  write_synthetic_dataset(data, 120, 120, 64, 2024);

  auto config = TrainConfig::desk();
  config.dataset_root = data;
  config.output_dir = work / "run";
  config.max_steps = steps;
  config.validate();
  const auto index = load_dataset(data, config.split());
  auto make_pool = [&] { return ImagePool(index.train_makeup, index.train_nonmakeup, {}, true); };

  const std::int64_t resume_at = steps / 2;
  const std::int64_t replay = std::min<std::int64_t>(100, steps - resume_at);
  const auto state_path = work / "state_mid.dmt";

  Trainer trainer(config, make_pool());
  std::vector<StepRecord> records;
  const auto start = std::chrono::steady_clock::now();
  while (!trainer.finished()) {
    records.push_back(trainer.step());
    if (trainer.state().step == resume_at) trainer.state().save(state_path, config);
  }
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60;
  std::cerr << "smoke: " << records.size() << " steps in " << fmt(minutes, 3) << " min\n";

  const std::size_t window = std::min<std::size_t>(100, records.size() / 2);
  auto term = [&](const std::string& key, bool head) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < window; ++i) {
      xs.push_back(records[head ? i : records.size() - window + i].losses.at(key));
    }
    return median(xs);
  };
  const double rec_head = term("rec", true), rec_tail = term("rec", false);
  r.rec = {rec_tail < 0.5 * rec_head, "median rec first " + fmt(rec_head) + ", last " + fmt(rec_tail) +
                                          ", ratio " + fmt(rec_tail / rec_head, 3) + " (need < 0.5)"};
  const double att_head = term("a", true), att_tail = term("a", false);
  r.attention = {att_tail < att_head, "median attention first " + fmt(att_head) + ", last " + fmt(att_tail)};

  auto& model = trainer.state().model();
  std::vector<LoadedSample> heldout;
  for (const auto* split : {&index.test_makeup, &index.test_nonmakeup}) {
    for (const auto& entry : *split) heldout.push_back(load_sample(entry));
  }
  double ssim_sum = 0.0;
  for (const auto& sample : heldout) {
    ssim_sum += ssim(first_image(reconstruct(model, sample.image).composed), sample.image.pixels);
  }
  const double mean_ssim = ssim_sum / static_cast<double>(heldout.size());
  r.heldout_ssim = {mean_ssim >= 0.7, "mean SSIM " + fmt(mean_ssim) + " over " + std::to_string(heldout.size()) +
                                          " held-out images (need >= 0.7)"};

  const auto& face = heldout.back();
  auto samples = sample_multimodal(model, face.image, 2, 99);
  auto region = related_mask(face.labels).to(torch::kBool).expand_as(face.image.pixels);
  const double diff = v((first_image(samples[0].composed) - first_image(samples[1].composed))
                            .abs()
                            .masked_select(region)
                            .mean());
  r.diversity = {diff > 1e-3, "mean |sample1 - sample2| in related region " + fmt(diff) + " (need > 1e-3)"};

  TrainConfig stored;
  auto resumed_state = TrainState::load(state_path, &stored);
  Trainer resumed(stored, make_pool(), std::move(resumed_state));
  Checklist c;
  c.expect(stored == config, "stored config round-trips");
  for (std::int64_t k = 0; k < replay; ++k) {
    auto got = resumed.step();
    const auto& want = records[static_cast<std::size_t>(resume_at + k)];
    c.expect(got.step == want.step && got.lr == want.lr && got.losses == want.losses,
             "step " + std::to_string(want.step) + " differs");
  }
  r.determinism = c.outcome("steps " + std::to_string(resume_at + 1) + ".." + std::to_string(resume_at + replay) +
                            " replayed after reload, every loss term equal");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string work_dir = "acceptance_work";
  std::vector<std::string> only, known;
  std::int64_t smoke_steps = 2000;
  app.add_option("--work-dir", work_dir, "Scratch directory for the smoke run");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--known-failure", known, "Criteria expected to fail (reported, not counted)");
  app.add_option("--smoke-steps", smoke_steps, "Training steps of the smoke run")->check(CLI::Range(2, 1000000));
  CLI11_PARSE(app, argc, argv);

  torch::set_num_threads(1);
  const std::set<std::string> selected(only.begin(), only.end());
  const std::set<std::string> expected_failures(known.begin(), known.end());
  auto wanted = [&](const std::string& name) { return selected.empty() || selected.count(name); };

  int unexpected = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    const bool known_failure = expected_failures.count(name) > 0;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail;
    if (!o.pass && known_failure) std::cout << " [known failure]";
    std::cout << std::endl;
    if (!o.pass && !known_failure) ++unexpected;
  };
  auto run = [&](const std::string& name, const std::function<Outcome()>& check) {
    if (!wanted(name)) return;
    try {
      report(name, check());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  };

  run("loss_identity_suite", loss_identity_suite);
  run("gradient_checks", gradient_checks);
  run("histogram_matching_oracle", histogram_matching_oracle);
  run("composition_identities", composition_identities);
  run("scenario_degeneracies", scenario_degeneracies);
  run("lr_schedule", lr_schedule);
  run("pair_sampling_frequencies", pair_sampling_frequencies);
  run("metric_correctness", metric_correctness);

  const std::vector<std::string> smoke_names{"toy_smoke_rec_halves", "toy_smoke_attention_decreases",
                                             "toy_smoke_heldout_ssim", "toy_smoke_multimodal_diversity",
                                             "checkpoint_determinism"};
  if (std::any_of(smoke_names.begin(), smoke_names.end(), wanted)) {
    try {
      auto r = run_smoke(fs::path(work_dir), smoke_steps);
      const std::vector<Outcome> outcomes{r.rec, r.attention, r.heldout_ssim, r.diversity, r.determinism};
      for (std::size_t i = 0; i < smoke_names.size(); ++i) {
        if (wanted(smoke_names[i])) report(smoke_names[i], outcomes[i]);
      }
    } catch (const std::exception& e) {
      for (const auto& name : smoke_names) {
        if (wanted(name)) report(name, {false, std::string("exception: ") + e.what()});
      }
    }
  }
  return unexpected;
}
