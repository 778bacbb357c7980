#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fd_oracle.hpp"
#include "scrutiny/analysis/analysis.hpp"
#include "scrutiny/error.hpp"

using namespace scrutiny;
using namespace scrutiny::analysis;
using kernels::KernelId;

namespace {

const CriticalityReport& cached(KernelId id) {
  static std::map<KernelId, CriticalityReport> reports;
  auto it = reports.find(id);
  if (it == reports.end()) it = reports.emplace(id, analyze_or_fiat(kernels::build_kernel(id))).first;
  return it->second;
}

std::uint64_t flat4(std::size_t k, std::size_t j, std::size_t i, std::size_t m) {
  return (((k * 13) + j) * 13 + i) * 5 + m;
}

}  // namespace

TEST(Analysis, UncriticalCounts) {
  struct Row {
    KernelId id;
    const char* var;
    std::uint64_t uncritical;
    std::uint64_t total;
  };
  const Row rows[] = {{KernelId::BT, "u", 1500, 10140},  {KernelId::SP, "u", 1500, 10140},
                      {KernelId::CG, "x", 2, 1402},      {KernelId::MG, "u", 7176, 46480},
                      {KernelId::MG, "r", 10543, 46480}, {KernelId::LU, "u", 1628, 10140},
                      {KernelId::LU, "rho_i", 300, 2028}, {KernelId::LU, "qs", 300, 2028},
                      {KernelId::LU, "rsd", 1500, 10140}, {KernelId::FT, "y", 4096, 266240},
                      {KernelId::FT, "sums", 0, 6}};
  for (const Row& r : rows) {
    const VariableCriticality& v = cached(r.id).variable(r.var);
    EXPECT_EQ(v.n_uncritical, r.uncritical) << kernels::to_string(r.id) << "." << r.var;
    EXPECT_EQ(v.total(), r.total);
    EXPECT_EQ(v.n_critical + v.n_uncritical, v.mask.total());
  }
}

TEST(Analysis, FiatKernels) {
  for (KernelId id : {KernelId::EP, KernelId::IS}) {
    const auto spec = kernels::build_kernel(id);
    try {
      analyze(spec);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::NoFloatSurface);
    }
    const CriticalityReport& r = cached(id);
    EXPECT_TRUE(r.by_fiat);
    for (const auto& v : r.per_variable) EXPECT_EQ(v.n_uncritical, 0u) << v.name;
  }
}

TEST(Analysis, IterationRange) {
  const auto spec = kernels::build_kernel(KernelId::MG);
  for (int k : {0, -1, spec.loop_len + 1}) {
    try {
      analyze(spec, k);
      FAIL() << k;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::IterationRange);
    }
  }
}

TEST(Analysis, MoreIterationsClassifyIdentically) {
  for (KernelId id : {KernelId::MG, KernelId::CG, KernelId::LU}) {
    const auto spec = kernels::build_kernel(id);
    EXPECT_EQ(analyze(spec, 3).masks(), cached(id).masks()) << kernels::to_string(id);
    EXPECT_EQ(analyze(spec, 1).masks(), cached(id).masks()) << kernels::to_string(id);
  }
}

TEST(Analysis, ScalarsAndAccumulatorsAreCritical) {
  const auto& ep = cached(KernelId::EP);
  EXPECT_TRUE(ep.variable("sx").scalar);
  EXPECT_EQ(ep.variable("sx").n_critical, 1u);
  EXPECT_EQ(ep.variable("q").n_critical, 10u);
  EXPECT_EQ(cached(KernelId::FT).variable("sums").n_critical, 6u);
  EXPECT_EQ(cached(KernelId::IS).variable("passed_verification").n_critical, 1u);
  // Scalars carry no mask in the aux file.
  EXPECT_EQ(ep.masks().count("sx"), 0u);
  EXPECT_EQ(ep.masks().count("q"), 1u);
}

TEST(Analysis, ReadOracleNeverReadSets) {
  const auto bt = oracle_read_tracking(kernels::build_kernel(KernelId::BT));
  const auto never = bt.variable("u").never_read();
  EXPECT_EQ(never.size(), 1500u);
  for (std::uint64_t e : never) {
    const std::size_t i = (e / 5) % 13;
    const std::size_t j = (e / 65) % 13;
    EXPECT_TRUE(i == 12 || j == 12) << e;
  }
  const auto mg = oracle_read_tracking(kernels::build_kernel(KernelId::MG));
  const auto mg_never = mg.variable("u").never_read();
  ASSERT_EQ(mg_never.size(), 7176u);
  EXPECT_EQ(mg_never.front(), 39304u);
  EXPECT_EQ(mg_never.back(), 46479u);
  EXPECT_EQ(oracle_read_tracking(kernels::build_kernel(KernelId::LU)).variable("rho_i").never_read().size(), 300u);
}

TEST(Analysis, PerturbationExamples) {
  const auto bt = kernels::build_kernel(KernelId::BT);
  EXPECT_EQ(oracle_perturbation(bt, "u", flat4(0, 12, 0, 0)), Perturbation::NoEffect);
  EXPECT_EQ(oracle_perturbation(bt, "u", flat4(0, 0, 0, 0)), Perturbation::Effect);
  const auto cg = kernels::build_kernel(KernelId::CG);
  EXPECT_EQ(oracle_perturbation(cg, "x", 1401), Perturbation::NoEffect);
  EXPECT_EQ(oracle_perturbation(cg, "x", 1400), Perturbation::NoEffect);
  EXPECT_EQ(oracle_perturbation(cg, "x", 1399), Perturbation::Effect);
}

TEST(Analysis, ReconcileEveryKernel) {
  for (KernelId id : kernels::kAllKernels) {
    const auto spec = kernels::build_kernel(id);
    const auto& report = cached(id);
    const auto reads = oracle_read_tracking(spec);
    const auto samples = sample_perturbations(spec, report, 40, 5);
    const Reconciliation rec = reconcile(report, reads, samples);
    EXPECT_TRUE(rec.consistent()) << kernels::to_string(id) << ": " << rec.mismatches.size() << " mismatches, first "
                                  << (rec.mismatches.empty() ? "" : rec.mismatches[0].reason);
    EXPECT_EQ(rec.samples_checked, samples.size());
  }
}

TEST(Analysis, SamplesCoverTinyUncriticalSetsExhaustively) {
  const auto spec = kernels::build_kernel(KernelId::CG);
  const auto samples = sample_perturbations(spec, cached(KernelId::CG), 10, 3);
  ASSERT_EQ(samples.size(), 10u);
  std::set<std::uint64_t> uncritical;
  for (const auto& s : samples) {
    if (!cached(KernelId::CG).variable("x").mask.is_critical(s.element)) uncritical.insert(s.element);
  }
  EXPECT_EQ(uncritical, (std::set<std::uint64_t>{1400, 1401}));
}

TEST(Analysis, CorruptedMaskIsCaught) {
  const auto spec = kernels::build_kernel(KernelId::BT);
  auto flags = cached(KernelId::BT).variable("u").mask.to_flags();
  flags[flat4(3, 12, 4, 2)] = 1;  // unread element claimed critical
  flags[flat4(3, 3, 4, 2)] = 0;   // read element claimed uncritical
  mask::MaskSet bad{{"u", mask::CriticalityMask::from_flags(std::span<const std::uint8_t>(flags))}};
  const CriticalityReport report = report_from_masks(spec, bad);
  const auto rec = reconcile(report, oracle_read_tracking(spec), {});
  ASSERT_EQ(rec.mismatches.size(), 2u);
}

TEST(Analysis, ReportFromMasksChecksShape) {
  const auto spec = kernels::build_kernel(KernelId::CG);
  try {
    report_from_masks(spec, {{"x", mask::CriticalityMask::all_critical(10)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MaskKernelMismatch);
  }
  try {
    report_from_masks(spec, {{"x", mask::CriticalityMask::all_critical(1402)}, {"z", mask::CriticalityMask::all_critical(1)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MaskKernelMismatch);
  }
}

TEST(Analysis, ImpactVectorsMatchMasks) {
  const auto& r = cached(KernelId::CG);
  ASSERT_EQ(r.impacts.size(), 1u);
  const auto& d = r.impacts[0].derivs;
  ASSERT_EQ(d.size(), 1402u);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i] != 0.0, r.variable("x").mask.is_critical(i)) << i;
}

TEST(Analysis, ThresholdOnlyDropsElements) {
  const auto spec = kernels::build_kernel(KernelId::CG);
  const auto loose = analyze(spec, 2, kDefaultSeed, 1e300);
  EXPECT_EQ(loose.variable("x").n_critical, 0u);
  const auto tight = analyze(spec, 2, kDefaultSeed, 1e-300);
  EXPECT_EQ(tight.masks(), cached(KernelId::CG).masks());
}

TEST(Analysis, GradientsAgreeWithFiniteDifferences) {
  for (KernelId id : {KernelId::BT, KernelId::CG, KernelId::LU}) {
    const auto spec = kernels::build_kernel(id);
    for (const auto& g : testkit::check_gradients(spec, cached(id), 25, 2)) {
      EXPECT_LT(g.rel_error, 1e-6) << kernels::to_string(id) << " " << g.variable << "[" << g.element << "] ad "
                                   << g.ad << " fd " << g.fd;
    }
  }
}

TEST(Analysis, RateFormatting) {
  EXPECT_EQ(format_rate(1500.0 / 10140), "14.8");
  EXPECT_EQ(format_rate(2.0 / 1402), "0.143");
  EXPECT_EQ(format_rate(4096.0 / 266240), "1.54");
  EXPECT_EQ(format_rate(1628.0 / 10140), "16.1");
  EXPECT_EQ(format_rate(7176.0 / 46480), "15.4");
  EXPECT_EQ(format_rate(0.0), "0");
  EXPECT_EQ(format_rate(1.0), "100");
}

TEST(Analysis, CsvSkipsScalars) {
  const std::vector<CriticalityReport> rs{cached(KernelId::EP)};
  EXPECT_EQ(report_csv(rs), "kernel,variable,total,critical,uncritical,uncritical_rate\nEP,q,10,10,0,0\n");
  EXPECT_EQ(report_csv(rs, true), "kernel,variable,total,critical,uncritical,uncritical_rate\n");
}
