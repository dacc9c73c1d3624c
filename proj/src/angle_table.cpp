#include <mpfr.h>

#include <stdexcept>

#include "sparsejac/transfer.hpp"

// Extended-precision construction of the per-gap rotation fractions.
// frac(beta^j * x/2) must be accurate to double precision for j up to ~64,
// which needs hundreds of bits: beta^j is exact in 512-bit arithmetic and the
// product keeps ~(512 - log2 beta^j) fractional bits.

namespace sparsejac::transfer {

namespace {

constexpr mpfr_prec_t kPrec = 768;

// phi0 / pi as an exact-or-high-precision value.
void set_x(mpfr_t out, const EnergyPoint& energy) {
    switch (energy.tag) {
        case EnergyPoint::Tag::rational:
            mpfr_set_si(out, energy.num, MPFR_RNDN);
            mpfr_div_si(out, out, energy.den, MPFR_RNDN);
            break;
        case EnergyPoint::Tag::named: {
            if (energy.name == "inv_sqrt2") {
                mpfr_set_ui(out, 2, MPFR_RNDN);
                mpfr_sqrt(out, out, MPFR_RNDN);
                mpfr_ui_div(out, 1, out, MPFR_RNDN);
            } else if (energy.name == "golden") {
                mpfr_set_ui(out, 5, MPFR_RNDN);
                mpfr_sqrt(out, out, MPFR_RNDN);
                mpfr_sub_ui(out, out, 1, MPFR_RNDN);
                mpfr_div_ui(out, out, 2, MPFR_RNDN);
            } else {
                throw std::invalid_argument("unknown named irrational: " + energy.name);
            }
            break;
        }
        case EnergyPoint::Tag::value:
            mpfr_set_d(out, energy.x, MPFR_RNDN);
            break;
    }
}

} // namespace

AngleTable build_angle_table(const model::SparsityProfile& profile,
                             const EnergyPoint& energy, int J) {
    if (J < 1) throw std::invalid_argument("build_angle_table: J >= 1 required");
    AngleTable table;
    table.gap_frac.resize(static_cast<std::size_t>(J));
    table.x_half = energy.x / 2.0;

    mpfr_t x, half, gap, prod;
    mpfr_inits2(kPrec, x, half, gap, prod, static_cast<mpfr_ptr>(nullptr));
    set_x(x, energy);
    mpfr_div_ui(half, x, 2, MPFR_RNDN);

    for (int j = 1; j <= J; ++j) {
        if (profile.kind == model::SparsityProfile::Kind::exponential) {
            mpfr_ui_pow_ui(gap, static_cast<unsigned long>(profile.beta),
                           static_cast<unsigned long>(j), MPFR_RNDN);
            // keep >= 128 fractional bits after the integer part
            if (mpfr_get_exp(gap) > kPrec - 128)
                throw std::overflow_error("build_angle_table: gap exceeds precision budget");
        } else {
            mpfr_set_si(gap, static_cast<long>(profile.gap(j)), MPFR_RNDN);
        }
        mpfr_mul(prod, gap, half, MPFR_RNDN);
        mpfr_frac(prod, prod, MPFR_RNDN);
        table.gap_frac[static_cast<std::size_t>(j - 1)] = mpfr_get_d(prod, MPFR_RNDN);
    }

    mpfr_clears(x, half, gap, prod, static_cast<mpfr_ptr>(nullptr));
    return table;
}

} // namespace sparsejac::transfer
