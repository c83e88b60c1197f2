// SPDX-License-Identifier: Apache-2.0
//
// wbce - compressive channel estimation for wideband hybrid mmWave MIMO links
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "oracles.hpp"
#include "wbce/metrics.hpp"

using namespace wbce;

namespace {

FreqChannel random_freq(std::mt19937_64& rng, Index k, Index nr, Index nt)
{
    FreqChannel f;
    for (Index i = 0; i < k; ++i)
        f.per_subcarrier.push_back(oracle::random_cmat(rng, nr, nt));
    return f;
}

CMat random_unitary(std::mt19937_64& rng, Index n)
{
    return oracle::random_cmat(rng, n, n).householderQr().householderQ();
}

double perfect_csi_rate(const FreqChannel& h, double snr, Index ns)
{
    double total = 0.0;
    for (const auto& m : h.per_subcarrier) {
        const RVec s = m.jacobiSvd().singularValues();
        for (Index i = 0; i < ns; ++i)
            total += std::log2(1.0 + snr / static_cast<double>(ns) * s(i) * s(i));
    }
    return total / static_cast<double>(h.size());
}

} // namespace

TEST_CASE("nmse basic values")
{
    std::mt19937_64 rng(1);
    const CVec h = oracle::random_cvec(rng, 30);
    CHECK(nmse(h, h) == 0.0);
    CHECK(nmse(h, CVec::Zero(30)) == 1.0);
    CHECK(nmse(h, 2.0 * h) == doctest::Approx(1.0));
    CHECK(nmse(h, 0.5 * h) == doctest::Approx(0.25));
    CHECK_THROWS_AS(nmse(CVec::Zero(3), CVec::Ones(3)), std::domain_error);
    CHECK_THROWS_AS(nmse(h, CVec::Zero(29)), std::invalid_argument);
}

TEST_CASE("nmse over taps equals nmse over the stacked vector")
{
    std::mt19937_64 rng(2);
    std::vector<CMat> a, b;
    for (int d = 0; d < 4; ++d) {
        a.push_back(oracle::random_cmat(rng, 3, 5));
        b.push_back(oracle::random_cmat(rng, 3, 5));
    }
    const TapChannel ta = TapChannel::from_taps(a), tb = TapChannel::from_taps(b);
    CHECK(nmse_tapwise(ta, tb) == doctest::Approx(nmse(ta.h_c, tb.h_c)).epsilon(1e-14));
    ChannelEstimate est;
    est.h_c = tb.h_c;
    CHECK(nmse(ta, est) == nmse(ta.h_c, tb.h_c));

    // permuting entries consistently leaves the value unchanged
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(ta.h_c.size());
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + perm.indices().size(), rng);
    CHECK(nmse(perm * ta.h_c, perm * tb.h_c) == doctest::Approx(nmse(ta.h_c, tb.h_c)).epsilon(1e-14));
}

TEST_CASE("estimate_freq uses the per-subcarrier FD estimate or the DFT of the taps")
{
    std::mt19937_64 rng(3);
    std::vector<CMat> taps{oracle::random_cmat(rng, 2, 3), oracle::random_cmat(rng, 2, 3)};
    ChannelEstimate est;
    est.h_c = TapChannel::from_taps(taps).h_c;
    const FreqChannel f = estimate_freq(est, 2, 3, 4);
    for (Index k = 0; k < 4; ++k) {
        const CMat ref = taps[0] + taps[1] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / 4.0);
        CHECK((f.per_subcarrier[static_cast<std::size_t>(k)] - ref).norm() < 1e-12);
    }
    est.kind = EstimatorKind::FD;
    est.freq = std::vector<CMat>(4, CMat::Ones(2, 3));
    CHECK(estimate_freq(est, 2, 3, 4).per_subcarrier[2] == CMat::Ones(2, 3));
}

TEST_CASE("spectral efficiency with perfect CSI matches the singular-value formula")
{
    std::mt19937_64 rng(4);
    for (Index ns : {1, 2, 3}) {
        const FreqChannel h = random_freq(rng, 5, 4, 6);
        for (double snr : {0.1, 1.0, 100.0})
            CHECK(spectral_efficiency(h, h, snr, ns) == doctest::Approx(perfect_csi_rate(h, snr, ns)).epsilon(1e-10));
    }
}

TEST_CASE("spectral efficiency identities")
{
    std::mt19937_64 rng(5);
    const FreqChannel h = random_freq(rng, 4, 4, 6);
    CHECK(spectral_efficiency(h, random_freq(rng, 4, 4, 6), 0.0, 2) == 0.0);

    // a common unitary rotation of both channels changes nothing
    const CMat ur = random_unitary(rng, 4), ut = random_unitary(rng, 6);
    const FreqChannel e = random_freq(rng, 4, 4, 6);
    FreqChannel hr = h, er = e;
    for (std::size_t k = 0; k < 4; ++k) {
        hr.per_subcarrier[k] = ur * h.per_subcarrier[k] * ut;
        er.per_subcarrier[k] = ur * e.per_subcarrier[k] * ut;
    }
    CHECK(spectral_efficiency(hr, er, 3.0, 2) == doctest::Approx(spectral_efficiency(h, e, 3.0, 2)).epsilon(1e-10));

    // the estimate scale does not matter
    FreqChannel es = e;
    for (auto& m : es.per_subcarrier)
        m *= cplx(0.0, 7.0);
    CHECK(spectral_efficiency(h, es, 3.0, 2) == doctest::Approx(spectral_efficiency(h, e, 3.0, 2)).epsilon(1e-10));
}

TEST_CASE("perfect CSI is never worse than a noisy estimate")
{
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        const Index ns = 1 + t % 3;
        const FreqChannel h = random_freq(rng, 3, 4, 5);
        FreqChannel e = h;
        for (auto& m : e.per_subcarrier)
            m += 0.7 * oracle::random_cmat(rng, 4, 5);
        CHECK(spectral_efficiency(h, h, 10.0, ns) >= spectral_efficiency(h, e, 10.0, ns) - 1e-12);
    }
}

TEST_CASE("rank-deficient estimate reduces the stream count")
{
    std::mt19937_64 rng(7);
    const FreqChannel h = random_freq(rng, 1, 4, 4);
    const CVec u = oracle::random_cvec(rng, 4), v = oracle::random_cvec(rng, 4);
    FreqChannel e;
    e.per_subcarrier.push_back(u * v.adjoint());
    const Eigen::JacobiSVD<CMat> svd(e.per_subcarrier[0], Eigen::ComputeFullU | Eigen::ComputeFullV);
    const cplx g = (svd.matrixU().col(0).adjoint() * h.per_subcarrier[0] * svd.matrixV().col(0))(0, 0);
    CHECK(spectral_efficiency(h, e, 2.0, 3) == doctest::Approx(std::log2(1.0 + 2.0 * std::norm(g))).epsilon(1e-10));

    FreqChannel zero;
    zero.per_subcarrier.push_back(CMat::Zero(4, 4));
    CHECK(spectral_efficiency(h, zero, 2.0, 1) == 0.0);
}

TEST_CASE("spectral efficiency argument checks")
{
    std::mt19937_64 rng(8);
    const FreqChannel h = random_freq(rng, 2, 3, 4);
    CHECK_THROWS_AS(spectral_efficiency(h, random_freq(rng, 3, 3, 4), 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(spectral_efficiency(h, random_freq(rng, 2, 4, 3), 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(spectral_efficiency(h, h, -1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(spectral_efficiency(h, h, std::numeric_limits<double>::infinity(), 1), std::invalid_argument);
    CHECK_THROWS_AS(spectral_efficiency(h, h, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(spectral_efficiency(h, h, 1.0, 4), std::invalid_argument);
}
