// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <cdu_jcas/modem.hpp>
#include <cdu_jcas/scene_channel.hpp>
#include <cdu_jcas/sic_receiver.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace cdu;

namespace
{
    constexpr double noise_var = 1.2294e-12;
    const double p_ul_13dbm = std::pow(10.0, (13.0 - 30.0) / 10.0);

    // Independent complex Gaussian source for test inputs.
    struct TestNoise
    {
        std::mt19937_64 rng;
        std::normal_distribution<double> g{0.0, 1.0};
        explicit TestNoise(std::uint64_t seed) : rng(seed) {}
        cplx operator()(double var)
        {
            const double s = std::sqrt(var / 2.0);
            return {s * g(rng), s * g(rng)};
        }
    };

    // Small frame on the default scene geometry.
    struct Fixture
    {
        OfdmNumerology num;
        ArrayGeometry bs, user;
        std::vector<PropagationPath> paths;
        Beamformer dl_tx, dl_rx, ul_tx;
        ChannelGrid hc, hs;
        QamConstellation qam = build_constellation(4);

        Fixture(std::size_t nc = 16, std::size_t ms = 8)
        {
            num.num_subcarriers = nc;
            num.num_symbols = ms;
            const double lambda = num.wavelength_m();
            bs = {8, 8, lambda / 2.0, lambda};
            user = {1, 1, lambda / 2.0, lambda};
            paths = derive_paths(Scene{}, num, 5, ReflectionModel::steady);
            dl_tx = ls_transmit_beamformer(bs, paths[0].angle_tx);
            dl_rx = sensing_receive_beamformer(dl_tx);
            ul_tx = ls_transmit_beamformer(user, paths[1].angle_tx);
            hc = comm_channel_grid(paths, ul_tx, bs, user, num);
            hs = sensing_channel_grid(paths_of_kind(paths, PathKind::sensing_echo), dl_tx, bs, num);
        }

        CsiEstimate perfect_csi(double p) const
        {
            CsiEstimate c{VectorGrid(num.num_subcarriers, 1, bs.size()), 1, p};
            for (std::size_t n = 0; n < num.num_subcarriers; ++n)
                std::copy(hc.at(n, 0).begin(), hc.at(n, 0).end(), c.h_hat.at(n, 0).begin());
            return c;
        }

        SymbolGrid data(std::uint64_t seed) const
        {
            return map_bits(random_bits(num.num_subcarriers * num.num_symbols * 2, seed), qam, num);
        }

        // y = hc sqrt(pu) du + hs sqrt(pd) ds
        ObservationGrid rx(const SymbolGrid &du, double pu, const SymbolGrid &ds, double pd) const
        {
            ObservationGrid y(num.num_subcarriers, num.num_symbols, bs.size());
            for (std::size_t n = 0; n < num.num_subcarriers; ++n)
                for (std::size_t m = 0; m < num.num_symbols; ++m)
                    for (std::size_t k = 0; k < bs.size(); ++k)
                        y.at(n, m)[k] = hc.at(n, m)[k] * std::sqrt(pu) * du.values(n, m) +
                                        hs.at(n, m)[k] * std::sqrt(pd) * ds.values(n, m);
            return y;
        }
    };

    double max_abs(std::span<const cplx> v)
    {
        double m = 0.0;
        for (auto x : v)
            m = std::max(m, std::abs(x));
        return m;
    }
} // namespace

TEST(EstimateUlCsi, NoiselessIsExact)
{
    const Fixture f;
    const auto pre = gen_preamble(4, f.num);
    ObservationGrid y(f.num.num_subcarriers, 4, 64);
    const double p = p_ul_13dbm;
    for (std::size_t n = 0; n < f.num.num_subcarriers; ++n)
        for (std::size_t m = 0; m < 4; ++m)
            for (std::size_t k = 0; k < 64; ++k)
                y.at(n, m)[k] = f.hc.at(n, 0)[k] * std::sqrt(p) * pre.values(n, m);
    const auto est = estimate_ul_csi(y, pre, p);
    EXPECT_EQ(est.averaged_symbols, 4u);
    for (std::size_t n = 0; n < f.num.num_subcarriers; ++n)
        for (std::size_t k = 0; k < 64; ++k)
            EXPECT_LE(std::abs(est.at(n)[k] - f.hc.at(n, 0)[k]), 1e-12 * std::abs(f.hc.at(n, 0)[k]));
}

TEST(EstimateUlCsi, Errors)
{
    const Fixture f;
    const auto pre = gen_preamble(2, f.num);
    ObservationGrid y(f.num.num_subcarriers, 2, 64);
    EXPECT_THROW(estimate_ul_csi(y, pre, 0.0), InputDomainError);
    EXPECT_THROW(estimate_ul_csi(y, gen_preamble(3, f.num), 1.0), DimensionMismatchError);
    auto bad = pre;
    bad.values(0, 0) *= 2.0;
    EXPECT_THROW(estimate_ul_csi(y, bad, 1.0), InputDomainError);
}

namespace
{
    // Sample variance of the estimation error for M_p preamble symbols.
    double csi_error_variance(std::size_t mp, std::uint64_t seed, std::size_t &samples)
    {
        OfdmNumerology num;
        num.num_subcarriers = 256;
        const auto pre = gen_preamble(mp, num);
        TestNoise noise(seed);
        const double p = p_ul_13dbm;
        const std::size_t dim = 64;
        double acc = 0.0;
        samples = 0;
        for (int rep = 0; rep < 2; ++rep)
        {
            ObservationGrid y(num.num_subcarriers, mp, dim); // h = 0: the estimate is pure error
            for (auto &v : y.values())
                v = noise(noise_var);
            const auto est = estimate_ul_csi(y, pre, p);
            for (auto v : est.h_hat.values())
            {
                acc += std::norm(v);
                ++samples;
            }
        }
        return acc / static_cast<double>(samples);
    }
} // namespace

TEST(EstimateUlCsi, SingleSymbolErrorVarianceMatches)
{
    std::size_t samples = 0;
    const double v = csi_error_variance(1, 21, samples);
    ASSERT_GE(samples, 10000u);
    const double expected = noise_var / p_ul_13dbm;
    EXPECT_NEAR(v / expected, 1.0, 0.05);
    CsiEstimate meta{VectorGrid(1, 1, 1), 1, p_ul_13dbm};
    EXPECT_NEAR(meta.per_entry_noise_var(noise_var), expected, expected * 1e-12);
}

TEST(EstimateUlCsi, AveragingOverFourSymbolsQuartersVariance)
{
    std::size_t s1 = 0, s4 = 0;
    const double v1 = csi_error_variance(1, 31, s1);
    const double v4 = csi_error_variance(4, 32, s4);
    EXPECT_NEAR(v4 / v1, 0.25, 0.025);
}

TEST(MmseWeights, ScalarExample)
{
    const cplx h = std::polar(1.0, 0.6);
    const auto w = mmse_weights(std::vector<cplx>{h}, 1.0, 1.0);
    EXPECT_NEAR(std::abs(w[0] - h / 2.0), 0.0, 1e-15);
    const cplx gain = std::conj(w[0]) * h;
    EXPECT_NEAR(gain.real(), 0.5, 1e-15);
    EXPECT_NEAR(gain.imag(), 0.0, 1e-15);
    // oracle: numerically minimized objective reaches the same gain
    const auto [b, j] = oracle::minimize_mmse_objective({h}, 1.0, 1.0);
    EXPECT_NEAR(std::abs(h * b - w[0]), 0.0, 1e-7);
    EXPECT_NEAR(j, 0.5, 1e-12);
}

TEST(MmseWeights, ZeroNoiseIsZeroForcing)
{
    const std::vector<cplx> h{{1e-5, 2e-6}, {-3e-6, 4e-6}, {2e-7, -8e-6}};
    const double p = 0.1;
    const auto w = mmse_weights(h, p, 0.0);
    const cplx g = dot_hermitian(w, h) * std::sqrt(p);
    EXPECT_NEAR(g.real(), 1.0, 1e-12);
    EXPECT_NEAR(g.imag(), 0.0, 1e-12);
}

TEST(MmseWeights, Errors)
{
    const std::vector<cplx> zero(4, 0.0);
    EXPECT_THROW(mmse_weights(zero, 1.0, 1.0), SingularChannelError);
    const std::vector<cplx> h{1.0};
    EXPECT_THROW(mmse_weights(h, 0.0, 1.0), InputDomainError);
    EXPECT_THROW(mmse_weights(h, 1.0, -1.0), InputDomainError);
}

TEST(MmseWeights, PropertyClosedFormMinimizesObjective)
{
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> logu(-1.0, 1.0);
    TestNoise noise(405);
    for (int i = 0; i < 100; ++i)
    {
        const std::size_t dim = (i % 2) ? 64 : 1 + (i % 7);
        const double h_scale = std::pow(10.0, -6.0 + 2.0 * logu(rng));
        std::vector<cplx> h(dim);
        for (auto &v : h)
            v = noise(h_scale * h_scale);
        const double p = std::pow(10.0, -2.0 + 2.0 * logu(rng));
        double hh = 0.0;
        for (auto v : h)
            hh += std::norm(v);
        // noise around the received UL power so the regularization matters
        const double sigma2 = p * hh * std::pow(10.0, 1.5 * logu(rng));

        const auto w = mmse_weights(h, p, sigma2);
        const cplx b_closed = w[0] / h[0];
        const double j_closed = oracle::mmse_objective(h, p, sigma2, b_closed);
        const double j_num = oracle::minimize_mmse_objective(h, p, sigma2).second;
        EXPECT_LE(std::abs(j_closed - j_num), 1e-9 * j_num) << "instance " << i;
        EXPECT_LE(j_closed, j_num * (1.0 + 1e-12));

        const cplx g = dot_hermitian(w, h) * std::sqrt(p);
        EXPECT_GT(g.real(), 0.0);
        EXPECT_LE(std::abs(g.imag()), 1e-12 * std::abs(g));
        // w lies on the span of h
        for (std::size_t k = 0; k < dim; ++k)
            EXPECT_LE(std::abs(w[k] - h[k] * b_closed), 1e-12 * std::abs(w[k]) + 1e-300);
    }
}

TEST(EqualizeAndDemod, NoiselessPerfectCsiRecoversSymbols)
{
    const Fixture f;
    const double p = p_ul_13dbm;
    const auto du = f.data(3);
    const auto y = f.rx(du, p, gen_sensing_symbols(f.num, 1), 0.0);
    const auto csi = f.perfect_csi(p);
    const auto eq = equalize_and_demod(y, mmse_combiner(csi, p, noise_var), csi, p, f.qam);
    EXPECT_TRUE(eq.symbols.values == du.values);
}

TEST(EqualizeAndDemod, SoftValueCarriesResidualEcho)
{
    const Fixture f;
    const double pu = p_ul_13dbm, pd = 0.5;
    const auto du = f.data(4);
    const auto ds = gen_sensing_symbols(f.num, 2);
    const auto y = f.rx(du, pu, ds, pd);
    const auto csi = f.perfect_csi(pu);
    const auto w = mmse_combiner(csi, pu, noise_var);
    const auto eq = equalize_and_demod(y, w, csi, pu, f.qam);
    for (std::size_t n = 0; n < f.num.num_subcarriers; ++n)
        for (std::size_t m = 0; m < f.num.num_symbols; ++m)
        {
            const cplx denom = dot_hermitian(w.at(n), f.hc.at(n, m)) * std::sqrt(pu);
            const cplx expected =
                du.values(n, m) + dot_hermitian(w.at(n), f.hs.at(n, m)) * std::sqrt(pd) * ds.values(n, m) / denom;
            EXPECT_LE(std::abs(eq.soft.values(n, m) - expected), 1e-12 * std::abs(expected));
        }
}

TEST(EqualizeAndDemod, QpskSymbolErrorRateMatchesUnionBound)
{
    // post-combining SNR P |h|^2 / sigma^2 = 10 dB on a single antenna
    OfdmNumerology num;
    num.num_subcarriers = 1024;
    num.num_symbols = 1024;
    const auto qam = build_constellation(4);
    const double p = 1.0, sigma2 = 0.1;
    const auto du = map_bits(random_bits(1024 * 1024 * 2, 9), qam, num);
    TestNoise noise(10);
    ObservationGrid y(1024, 1024, 1);
    CsiEstimate csi{VectorGrid(1024, 1, 1), 1, p};
    for (std::size_t n = 0; n < 1024; ++n)
    {
        const cplx h = std::polar(1.0, 0.01 * double(n));
        csi.h_hat.at(n, 0)[0] = h;
        for (std::size_t m = 0; m < 1024; ++m)
            y.at(n, m)[0] = h * du.values(n, m) + noise(sigma2);
    }
    const auto eq = equalize_and_demod(y, mmse_combiner(csi, p, sigma2), csi, p, qam);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < du.values.size(); ++i)
        errors += eq.symbols.values.values()[i] != du.values.values()[i];
    const double ser = double(errors) / double(du.values.size());
    const double union_bound = 2.0 * oracle::q_function(std::sqrt(10.0));
    EXPECT_NEAR(union_bound, 1.565e-3, 1e-6);
    EXPECT_NEAR(ser / union_bound, 1.0, 0.2);
}

TEST(EqualizeAndDemod, SingularAndMismatch)
{
    const Fixture f;
    const auto csi = f.perfect_csi(1.0);
    CombinerWeights zero{VectorGrid(f.num.num_subcarriers, 1, 64)};
    ObservationGrid y(f.num.num_subcarriers, f.num.num_symbols, 64);
    EXPECT_THROW(equalize_and_demod(y, zero, csi, 1.0, f.qam), SingularChannelError);
    ObservationGrid wrong(f.num.num_subcarriers, f.num.num_symbols, 8);
    EXPECT_THROW(equalize_and_demod(wrong, mmse_combiner(csi, 1.0, 1e-12), csi, 1.0, f.qam), DimensionMismatchError);
}

TEST(CancelCommunication, PerfectCsiAndDecisionsLeaveEchoPlusNoise)
{
    const Fixture f;
    const double pu = p_ul_13dbm, pd = 0.5;
    const auto du = f.data(5);
    const auto ds = gen_sensing_symbols(f.num, 3);
    auto y = f.rx(du, pu, ds, pd);
    const auto echo_only = f.rx(f.data(5), 0.0, ds, pd);
    ObservationGrid noise_grid(f.num.num_subcarriers, f.num.num_symbols, 64);
    TestNoise noise(6);
    for (auto &v : noise_grid.values())
        v = noise(noise_var);
    y += noise_grid;
    const auto cleaned = cancel_communication(y, f.perfect_csi(pu), du, pu);
    const double scale = max_abs(y.values());
    for (std::size_t i = 0; i < cleaned.values().size(); ++i)
    {
        const cplx expected = echo_only.values()[i] + noise_grid.values()[i];
        EXPECT_LE(std::abs(cleaned.values()[i] - expected), 1e-12 * scale);
    }
}

TEST(CancelCommunication, WrongDecisionLeavesResidualAtThatCellOnly)
{
    const Fixture f;
    const double pu = p_ul_13dbm;
    const auto du = f.data(7);
    const auto y = f.rx(du, pu, gen_sensing_symbols(f.num, 1), 0.0);
    auto decided = du;
    const std::size_t n0 = 3, m0 = 5;
    const cplx wrong = f.qam.points[(demap_ml(du.values(n0, m0), f.qam).label + 1) % 4];
    decided.values(n0, m0) = wrong;
    const auto csi = f.perfect_csi(pu);
    const auto cleaned = cancel_communication(y, csi, decided, pu);
    const double scale = max_abs(y.values());
    for (std::size_t n = 0; n < f.num.num_subcarriers; ++n)
        for (std::size_t m = 0; m < f.num.num_symbols; ++m)
            for (std::size_t k = 0; k < 64; ++k)
            {
                const cplx expected = (n == n0 && m == m0)
                                          ? csi.at(n)[k] * std::sqrt(pu) * (du.values(n, m) - wrong)
                                          : cplx{0.0, 0.0};
                EXPECT_LE(std::abs(cleaned.at(n, m)[k] - expected), 1e-12 * scale);
            }
}

TEST(CancelCommunication, NoiselessResidualIsSeparable)
{
    const Fixture f;
    const double pu = p_ul_13dbm, pd = 0.5;
    const auto du = f.data(8);
    const auto ds = gen_sensing_symbols(f.num, 4);
    const auto cleaned = cancel_communication(f.rx(du, pu, ds, pd), f.perfect_csi(pu), du, pu);
    const auto echo = extract_echo(cleaned, f.dl_rx, ds);
    double scale = 0.0;
    for (auto v : echo.values())
        scale = std::max(scale, std::abs(v));
    for (std::size_t n = 0; n < f.num.num_subcarriers; ++n)
        for (std::size_t m = 0; m < f.num.num_symbols; ++m)
        {
            const cplx minor = echo(n, m) * echo(0, 0) - echo(n, 0) * echo(0, m);
            EXPECT_LE(std::abs(minor), 1e-10 * scale * scale);
        }
}

TEST(CancelCommunication, DimensionMismatch)
{
    const Fixture f;
    ObservationGrid y(f.num.num_subcarriers, f.num.num_symbols, 64);
    const Fixture g(32, 8);
    EXPECT_THROW(cancel_communication(y, g.perfect_csi(1.0), f.data(1), 1.0), DimensionMismatchError);
}

TEST(ExtractEcho, PointedStaticPathGivesScaledDelayPhasor)
{
    OfdmNumerology num;
    const double lambda = num.wavelength_m();
    const ArrayGeometry bs{8, 8, lambda / 2.0, lambda};
    const auto paths = paths_of_kind(derive_paths(Scene{}, num, 12, ReflectionModel::steady), PathKind::sensing_echo);
    const cplx c0 = std::polar(1.0, 0.9);
    const auto tx = ls_transmit_beamformer(bs, paths[0].angle_tx, c0);
    const auto hs = sensing_channel_grid(paths, tx, bs, num);
    const auto ds = gen_sensing_symbols(num, 5);
    const double pd = 0.5;
    ObservationGrid y(num.num_subcarriers, num.num_symbols, 64);
    for (std::size_t n = 0; n < num.num_subcarriers; ++n)
        for (std::size_t m = 0; m < num.num_symbols; ++m)
            for (std::size_t k = 0; k < 64; ++k)
                y.at(n, m)[k] = hs.at(n, m)[k] * std::sqrt(pd) * ds.values(n, m);
    const auto echo = extract_echo(y, sensing_receive_beamformer(tx), ds);
    for (std::size_t n = 0; n < num.num_subcarriers; ++n)
        for (std::size_t m = 0; m < num.num_symbols; m += 7)
        {
            const cplx expected = std::sqrt(pd) * paths[0].amplitude * c0 * c0 *
                                  std::polar(1.0, -2.0 * oracle::pi * double(n) * 240e3 * paths[0].delay_s);
            EXPECT_LE(std::abs(echo(n, m) - expected), 1e-10 * std::abs(expected));
        }
}

TEST(ExtractEcho, NoiseVarianceScalesWithBeamNorm)
{
    OfdmNumerology num;
    const Fixture f;
    const auto ds = gen_sensing_symbols(num, 6);
    ObservationGrid y(num.num_subcarriers, num.num_symbols, 64);
    TestNoise noise(7);
    for (auto &v : y.values())
        v = noise(1.0);
    const auto echo = extract_echo(y, f.dl_rx, ds);
    double acc = 0.0;
    for (auto v : echo.values())
        acc += std::norm(v);
    const double expected = squared_norm(f.dl_rx.weights);
    EXPECT_NEAR(acc / double(echo.size()) / expected, 1.0, 0.05);
}

TEST(ExtractEcho, ZeroInZeroOut)
{
    const Fixture f;
    const ObservationGrid y(f.num.num_subcarriers, f.num.num_symbols, 64);
    for (auto v : extract_echo(y, f.dl_rx, gen_sensing_symbols(f.num, 1)).values())
        EXPECT_EQ(v, cplx(0.0, 0.0));
}

TEST(SicIdentity, EchoIndependentOfUplinkDataWhenCancellationIsExact)
{
    const Fixture f;
    const double pu = p_ul_13dbm, pd = 0.5;
    const auto ds = gen_sensing_symbols(f.num, 9);
    const auto csi = f.perfect_csi(pu);
    const auto a = f.data(100), b = f.data(200);
    const auto ea = extract_echo(cancel_communication(f.rx(a, pu, ds, pd), csi, a, pu), f.dl_rx, ds);
    const auto eb = extract_echo(cancel_communication(f.rx(b, pu, ds, pd), csi, b, pu), f.dl_rx, ds);
    double scale = 0.0;
    for (auto v : ea.values())
        scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < ea.size(); ++i)
        EXPECT_LE(std::abs(ea.values()[i] - eb.values()[i]), 1e-9 * scale);
}
