#pragma once

#include <string>
#include <vector>

#include "fourfield/element.hpp"
#include "fourfield/errors.hpp"

namespace fourfield {

/// A choice of the four element families, e.g. "L1N11R2D0": Lagrange degree
/// for displacement, Nedelec kind+degree for the displacement gradient,
/// Raviart-Thomas/BDM degree for stress, discontinuous degree for pressure.
struct ElementQuartet {
  int disp_degree = 1;      // L1 | L2
  int grad_kind = 1;        // Nedelec kind 1 | 2
  int grad_degree = 1;      // degree 1 | 2
  bool stress_bdm = false;  // false: R (Raviart-Thomas), true: B (BDM)
  int stress_degree = 1;    // 1 | 2
  int pressure_degree = 0;  // D0 | D1 | D2

  ElementFamily disp() const { return {Family::Lagrange, disp_degree}; }
  ElementFamily grad() const {
    return {grad_kind == 1 ? Family::NedelecKind1 : Family::NedelecKind2, grad_degree};
  }
  ElementFamily stress() const {
    return {stress_bdm ? Family::BDM : Family::RaviartThomas, stress_degree};
  }
  ElementFamily pressure() const { return {Family::Discontinuous, pressure_degree}; }

  std::string name() const {
    std::string s = "L";
    s += char('0' + disp_degree);
    s += 'N';
    s += char('0' + grad_kind);
    s += char('0' + grad_degree);
    s += stress_bdm ? 'B' : 'R';
    s += char('0' + stress_degree);
    s += 'D';
    s += char('0' + pressure_degree);
    return s;
  }

  // Names look like "L1N11R2D0": 9 characters.
  static ElementQuartet parse(const std::string& s) {
    auto fail = [&]() -> ElementQuartet { throw ConfigError("invalid quartet name: " + s); };
    if (s.size() != 9) return fail();
    if (s[0] != 'L' || s[1] < '1' || s[1] > '2') return fail();
    if (s[2] != 'N' || s[3] < '1' || s[3] > '2' || s[4] < '1' || s[4] > '2') return fail();
    if ((s[5] != 'R' && s[5] != 'B') || s[6] < '1' || s[6] > '2') return fail();
    if (s[7] != 'D' || s[8] < '0' || s[8] > '2') return fail();
    ElementQuartet q;
    q.disp_degree = s[1] - '0';
    q.grad_kind = s[3] - '0';
    q.grad_degree = s[4] - '0';
    q.stress_bdm = (s[5] == 'B');
    q.stress_degree = s[6] - '0';
    q.pressure_degree = s[8] - '0';
    return q;
  }

  static std::vector<ElementQuartet> all() {
    std::vector<ElementQuartet> out;
    for (int l = 1; l <= 2; ++l)
      for (int nk = 1; nk <= 2; ++nk)
        for (int nd = 1; nd <= 2; ++nd)
          for (int sb = 0; sb <= 1; ++sb)
            for (int sd = 1; sd <= 2; ++sd)
              for (int pd = 0; pd <= 2; ++pd)
                out.push_back({l, nk, nd, sb == 1, sd, pd});
    return out;
  }
};

} // namespace fourfield
