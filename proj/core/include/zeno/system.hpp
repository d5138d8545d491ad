// system.hpp — Description of the measured system: discrete levels of H0,
// optional sublevels of H1, and the perturbation matrix elements V that
// drive jumps between levels.  Energies are angular frequencies.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "zeno/errors.hpp"

namespace zeno::sys {

using Complex = std::complex<double>;

struct Level {
    int index = 0;
    double omega = 0.0; // E_n / hbar
};

struct Sublevel {
    int level = 0;
    std::string label;
    double omega1 = 0.0; // E_1(n, alpha) / hbar
};

// Reference to a basis state |n alpha>; an empty sublevel label refers to
// the implicit single sublevel of a level with no sublevels declared.
struct StateRef {
    int level = 0;
    std::string sublevel;

    bool operator==(const StateRef& o) const {
        return level == o.level && sublevel == o.sublevel;
    }
};

struct VElement {
    StateRef from;
    StateRef to;
    Complex value; // V_{from, to}
};

struct MeasuredSystemSpec {
    std::vector<Level> levels;
    std::vector<Sublevel> sublevels; // may be empty
    std::vector<VElement> v_elements;
    double lambda = 0.0;

    void validate() const;

    // Full basis |n alpha>, level-major, in declaration order.
    std::vector<StateRef> states() const;
    int state_index(const StateRef& s) const;

    double omega_of_level(int level) const;
    double omega1_of(const StateRef& s) const;

    // Hermitian lookup: the stored element, or the conjugate of the reverse
    // one, or zero.
    Complex v(const StateRef& a, const StateRef& b) const;

    // omega_{i alpha, f alpha1} = omega_if + (E1(i,alpha) - E1(f,alpha1)).
    double omega_ia_fa1(const StateRef& i, const StateRef& f) const {
        return omega_of_level(i.level) - omega_of_level(f.level) + omega1_of(i) -
               omega1_of(f);
    }
};

} // namespace zeno::sys
