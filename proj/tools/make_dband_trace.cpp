// Regenerates data/pmf_dband_1m.csv: a synthetic stand-in for a swept
// network-analyzer trace of a 1 m dielectric fiber across the D band
// (110-170 GHz), with measurement noise for the ingestion pipeline's median
// filter to remove. The smooth attenuation curve is calibrated so its best
// point inside the 139.5-140.5 GHz sub-band is exactly -2.48 dB/m.

#include <cstdio>
#include <string>

#include "rof/common.hpp"
#include "rof/fiber.hpp"
#include "rof/io.hpp"
#include "rof/rng.hpp"

using namespace rof;

namespace {

double attenuation_db(double f) {
  const double u = (f - 140e9) / 30e9;
  return 2.62 + 1.15 * u * u + 0.16 * std::cos(2.0 * kPi * (f - 110e9) / 17.3e9 + 0.7);
}

double group_delay_s(double f) {
  const double u = (f - 140e9) / 30e9;
  return 5.15e-9 + 35e-12 * std::cos(2.0 * kPi * (f - 110e9) / 11.7e9 + 0.3) + 20e-12 * u;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "data/pmf_dband_1m.csv";
  const Index n = 20001;
  const double f_lo = 110e9, f_hi = 170e9;

  // Best (lowest) attenuation inside the 1 GHz sub-band around 140 GHz.
  double best = attenuation_db(139.5e9);
  for (Index i = 0; i <= 2000; ++i)
    best = std::min(best, attenuation_db(139.5e9 + 0.5e6 * double(i)));
  const double offset = 2.48 - best;

  Rng rng(0xD0F1BEEF);
  RawMeasurement meas;
  meas.freqs.resize(n);
  meas.magnitude_db.resize(n);
  meas.group_delay.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double f = f_lo + (f_hi - f_lo) * double(i) / double(n - 1);
    meas.freqs(i) = f;
    meas.magnitude_db(i) = -(attenuation_db(f) + offset) + gauss(rng, 0.12);
    meas.group_delay(i) = group_delay_s(f) + gauss(rng, 25e-12);
  }
  write_measurement(out, meas);
  std::printf("wrote %s (%ld rows)\n", out.c_str(), long(n));
  return 0;
}
