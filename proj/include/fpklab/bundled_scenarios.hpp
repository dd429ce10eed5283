#pragma once

#include <map>
#include <string>

namespace fpklab {

/// Ready-to-run scenario configs shipped with the tool (also installed under
/// scenarios/ in the source tree). `fpklab run <name>` resolves these when
/// no file of that name exists.
inline const std::map<std::string, std::string>& bundled_scenarios() {
    static const std::map<std::string, std::string> table = {
        {"example_1_1_eps05", R"(# Mean-field linear drift, epsilon = 0.5: exponential relaxation of the mean
[grid]
dim = 1
lower = -12
upper = 12
cells = 512

[weight]
m = 1
gamma = 0.5

[diffusion]
a = 1

[drift]
variant = mean_field_linear
epsilon = 0.5

[initial]
kind = gaussian
mean = 2
variance = 0.25

[solve]
horizon = 8
snapshot_stride = 0.1

[run]
analyses = evolve, invariants, conditions, decay-fit, w1-check, particles, cross-validate
output = out/example_1_1_eps05
seed = 20240817

[decay-fit]
reference = gaussian
ref_mean = 0
ref_variance = 1
window_lo = 4
window_hi = 8

[w1-check]
reference = gaussian
ref_mean = 0
ref_variance = 1

[conditions]
constants = closed-form
q = 2
measures = 10
points = 10000

[particles]
n = 10000
dt = 0.01
seeds = 11, 12, 13
)"},
        {"example_1_1_eps1", R"(# Mean-field linear drift, epsilon = 1: conserved mean selects the limit
[grid]
dim = 1
lower = -16
upper = 16
cells = 512

[weight]
m = 1
gamma = 0.5

[diffusion]
a = 1

[drift]
variant = mean_field_linear
epsilon = 1

[initial]
kind = gaussian
mean = 1
variance = 4

[solve]
horizon = 15
snapshot_stride = 0.1

[run]
analyses = evolve, stationary, invariants
output = out/example_1_1_eps1
seed = 20240817

[stationary]
constraint_q = 1
guess_mean = 0
guess_variance = 1
)"},
        {"example_1_1_eps15", R"(# Mean-field linear drift, epsilon = 1.5: the mean grows like exp(t/2)
[grid]
dim = 1
lower = -16
upper = 16
cells = 512

[weight]
m = 1
gamma = 0.5

[diffusion]
a = 1

[drift]
variant = mean_field_linear
epsilon = 1.5

[initial]
kind = gaussian
mean = 1
variance = 1

[solve]
horizon = 3
snapshot_stride = 0.1

[run]
analyses = evolve, invariants
output = out/example_1_1_eps15
seed = 20240817
)"},
        {"example_1_1_no_stationary", R"(# Shifted mean-field drift at epsilon = 1: no stationary solution exists;
# the fixed-point iteration walks off monotonically and reports it
[grid]
dim = 1
lower = -12
upper = 12
cells = 512

[weight]
m = 1
gamma = 0.5

[diffusion]
a = 1

[drift]
variant = mean_field_linear
epsilon = 1
delta_shift = 0.1

[initial]
kind = gaussian
mean = 0
variance = 1

[solve]
horizon = 1

[run]
analyses = stationary
output = out/example_1_1_no_stationary
seed = 20240817

[stationary]
max_iterations = 25
guess_mean = 0
guess_variance = 1
)"},
        {"example_2d_branch", R"(# 2D conserved-form model: one stationary branch per target value Q
[grid]
dim = 2
lower = -6, -6
upper = 6, 6
cells = 128, 128

[weight]
m = 1
gamma = 0.5

[diffusion]
a = 1

[drift]
variant = rvh
r = 2, 0, 0, 2
v = 1, 1
h = 1, 1
lambda = 2
q = 2
epsilon = 0.1
eta_amplitude = 1

[initial]
kind = gaussian
mean = 0.5, 0.5
variance = 0.5, 0.5

[solve]
horizon = 5
snapshot_stride = 0.1

[run]
analyses = branch-sweep, evolve, invariants, conditions
output = out/example_2d_branch
seed = 20240817

[branch-sweep]
q_values = -1, 0, 1

[conditions]
constants = closed-form
q = 1
measures = 10
points = 10000

[stationary]
tol = 1e-9
max_iterations = 80
)"},
        {"ou_linear", R"(# Linear baseline (epsilon = 0): plain confining drift relaxing to its
# stationary profile at unit rate
[grid]
dim = 1
lower = -12
upper = 12
cells = 512

[weight]
m = 1
gamma = 0.5

[diffusion]
a = 1

[drift]
variant = mean_field_linear
epsilon = 0

[initial]
kind = gaussian
mean = 2
variance = 1

[solve]
horizon = 8
snapshot_stride = 0.1

[run]
analyses = evolve, stationary, decay-fit, w1-check
output = out/ou_linear
seed = 20240817

[stationary]
guess_mean = 0
guess_variance = 1

[decay-fit]
reference = stationary
window_lo = 4
window_hi = 8

[w1-check]
reference = stationary
)"},
    };
    return table;
}

}  // namespace fpklab
