#include "contraction/pairing.hpp"

namespace contraction {

const char* to_string(PairingVariant v) {
  switch (v) {
    case PairingVariant::gateaux_lp: return "gateaux_lp";
    case PairingVariant::sign_l1: return "sign_l1";
    case PairingVariant::max_linf: return "max_linf";
    case PairingVariant::deimling_numeric: return "deimling_numeric";
    case PairingVariant::deimling_l1_closed: return "deimling_l1_closed";
    case PairingVariant::single_index: return "single_index";
  }
  return "unknown";
}

PairingVariant parse_pairing_variant(const std::string& name) {
  for (auto v : {PairingVariant::gateaux_lp, PairingVariant::sign_l1, PairingVariant::max_linf,
                 PairingVariant::deimling_numeric, PairingVariant::deimling_l1_closed,
                 PairingVariant::single_index}) {
    if (name == to_string(v)) return v;
  }
  throw PairingError("unknown pairing kind '" + name + "'");
}

}  // namespace contraction
