#include "san/losses.hpp"

#include <cstdio>

namespace san {

const std::vector<std::pair<std::string, double LossReport::*>>& LossReport::fields() {
    static const std::vector<std::pair<std::string, double LossReport::*>> fs = {
        {"d_p_gan", &LossReport::d_p_gan},
        {"d_p_gan_seg", &LossReport::d_p_gan_seg},
        {"d_f_gan", &LossReport::d_f_gan},
        {"d_f_gan_seg", &LossReport::d_f_gan_seg},
        {"g_p_gan", &LossReport::g_p_gan},
        {"g_p_gan_seg", &LossReport::g_p_gan_seg},
        {"g_f_gan", &LossReport::g_f_gan},
        {"g_f_gan_seg", &LossReport::g_f_gan_seg},
        {"cycle", &LossReport::cycle},
        {"cycle_seg", &LossReport::cycle_seg},
        {"d_total", &LossReport::d_total},
        {"g_total", &LossReport::g_total},
    };
    return fs;
}

bool LossReport::all_finite() const {
    for (const auto& [name, ptr] : fields())
        if (!std::isfinite(this->*ptr)) return false;
    return true;
}

std::string LossReport::serialize() const {
    std::string out;
    char buf[64];
    for (const auto& [name, ptr] : fields()) {
        std::snprintf(buf, sizeof buf, "%.17g", this->*ptr);
        if (!out.empty()) out += ' ';
        out += name;
        out += '=';
        out += buf;
    }
    return out;
}

} // namespace san
