#include "zeno/system.hpp"

#include <algorithm>
#include <cmath>

namespace zeno::sys {

void MeasuredSystemSpec::validate() const {
    if (levels.empty()) throw ValidationError("MeasuredSystemSpec: no levels");
    if (lambda < 0.0) throw ValidationError("MeasuredSystemSpec: lambda must be nonnegative");
    for (std::size_t a = 0; a < levels.size(); ++a)
        for (std::size_t b = a + 1; b < levels.size(); ++b)
            if (levels[a].index == levels[b].index)
                throw ValidationError("MeasuredSystemSpec: duplicate level index " +
                                      std::to_string(levels[a].index));
    for (const auto& s : sublevels) {
        omega_of_level(s.level); // existence check
        if (s.label.empty())
            throw ValidationError("MeasuredSystemSpec: sublevel labels must be nonempty");
    }
    const auto basis = states();
    auto known = [&](const StateRef& r) {
        return std::any_of(basis.begin(), basis.end(),
                           [&](const StateRef& s) { return s == r; });
    };
    for (const auto& e : v_elements) {
        if (!known(e.from) || !known(e.to))
            throw ValidationError("MeasuredSystemSpec: V element references unknown state");
        if (e.from == e.to)
            throw ValidationError(
                "MeasuredSystemSpec: diagonal V elements must be absent (level " +
                std::to_string(e.from.level) + ")");
        // When both directions are given they must be conjugates.
        for (const auto& o : v_elements)
            if (o.from == e.to && o.to == e.from &&
                std::abs(o.value - std::conj(e.value)) > 1e-12)
                throw ValidationError(
                    "MeasuredSystemSpec: V elements violate hermiticity between levels " +
                    std::to_string(e.from.level) + " and " + std::to_string(e.to.level));
    }
}

std::vector<StateRef> MeasuredSystemSpec::states() const {
    std::vector<StateRef> out;
    for (const auto& lv : levels) {
        bool has_sub = false;
        for (const auto& s : sublevels)
            if (s.level == lv.index) {
                out.push_back(StateRef{lv.index, s.label});
                has_sub = true;
            }
        if (!has_sub) out.push_back(StateRef{lv.index, std::string{}});
    }
    return out;
}

int MeasuredSystemSpec::state_index(const StateRef& s) const {
    const auto basis = states();
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis[i] == s) return static_cast<int>(i);
    throw ValidationError("MeasuredSystemSpec: unknown state |" +
                          std::to_string(s.level) + "," + s.sublevel + ">");
}

double MeasuredSystemSpec::omega_of_level(int level) const {
    for (const auto& lv : levels)
        if (lv.index == level) return lv.omega;
    throw ValidationError("MeasuredSystemSpec: unknown level " + std::to_string(level));
}

double MeasuredSystemSpec::omega1_of(const StateRef& s) const {
    for (const auto& sub : sublevels)
        if (sub.level == s.level && sub.label == s.sublevel) return sub.omega1;
    if (s.sublevel.empty()) {
        omega_of_level(s.level);
        return 0.0;
    }
    throw ValidationError("MeasuredSystemSpec: unknown sublevel |" +
                          std::to_string(s.level) + "," + s.sublevel + ">");
}

Complex MeasuredSystemSpec::v(const StateRef& a, const StateRef& b) const {
    for (const auto& e : v_elements) {
        if (e.from == a && e.to == b) return e.value;
        if (e.from == b && e.to == a) return std::conj(e.value);
    }
    return Complex(0.0, 0.0);
}

} // namespace zeno::sys
