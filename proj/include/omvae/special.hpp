// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace omvae {

// ln Γ(x) for x > 0 (Lanczos, g = 607/128, 15 terms).
double ln_gamma(double x);

// Regularized incomplete beta I_x(a, b), a, b > 0, 0 <= x <= 1. Continued
// fraction evaluated with the modified Lentz method; the argument is mirrored
// through I_x(a,b) = 1 - I_{1-x}(b,a) when x > (a+1)/(a+b+2).
double reg_inc_beta(double a, double b, double x);

// Two-sided p-value of Student's t with df degrees of freedom:
// I_{df/(df+t²)}(df/2, 1/2).
double t_two_sided_p(double t, double df);

}  // namespace omvae
