#include "drtr/report.hpp"

#include <ostream>

#include <json.hpp>

namespace drtr {

void RefinementReport::append_jsonl(std::ostream& out) const {
    for (const auto& p : pruned) {
        nlohmann::ordered_json j;
        j["epoch"] = epoch;
        j["v"] = p.v;
        j["k"] = p.k;
        j["u"] = p.u;
        j["d"] = p.distance;
        j["alpha"] = p.alpha;
        j["action"] = "prune";
        out << j.dump() << '\n';
    }
    for (const auto& a : added) {
        nlohmann::ordered_json j;
        j["epoch"] = epoch;
        j["v"] = a.v;
        j["u"] = a.u;
        j["sim"] = a.sim;
        j["prob"] = a.prob;
        j["action"] = "add";
        out << j.dump() << '\n';
    }
}

} // namespace drtr
