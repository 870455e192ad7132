#pragma once

#include <span>

#include "capflow/measure.hpp"

namespace capflow {

// Closed forms shared by the measure and capacity variants. values are the
// distinct plateau heights in descending order, masses[i] the size of
// {|f| >= values[i]} under whatever monotone set function is in use.
double lorentz_from_levels(std::span<const double> values, std::span<const double> masses, double p, double q);
double weak_lorentz_from_levels(std::span<const double> values, std::span<const double> masses, double p);

double lorentz_norm(const Field& f, const LorentzExponents& e);
double weak_lorentz_norm(const Field& f, double p);

/// Gamma_r^{p,q}(f) with f_r**(t) = ((1/t) int_0^t (f*)^r)^{1/r}.
double gamma_norm(const Field& f, const LorentzExponents& e, double r);

/// | || |f|^r ||_{p,q} - ||f||_{pr,qr}^r |
double power_identity_residual(const Field& f, const LorentzExponents& e, double r);

double pairing(const Field& f, const Field& g);
double pairing_abs(const Field& f, const Field& g);

}  // namespace capflow
