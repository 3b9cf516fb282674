#include "adlraw/sensorsim/fleet.hpp"

#include "adlraw/numcore/tensor.hpp"

#include <string>

namespace adlraw::sensorsim {

namespace {

SensorProfile make(int id, const char* name, double gain, double read, double row, double fpn,
                   double black, BayerLayout layout) {
    SensorProfile p;
    p.sensor_id = id;
    p.name = name;
    p.base_gain = gain;
    p.read_noise = read;
    p.row_noise = row;
    p.fpn_amplitude = fpn;
    p.fpn_seed = 0xf00d0000ull + static_cast<std::uint64_t>(id);
    p.black_level = black;
    p.layout = layout;
    p.iso_set = {100, 400, 1600, 3200};
    return p;
}

} // namespace

Fleet fleet_preset(std::string_view name) {
    using L = BayerLayout;
    if (name == "default5") {
        return Fleet{"default5",
                     {make(0, "phone-a", 4.0e-4, 0.006, 0.0010, 0.002, 0.030, L::rggb),
                      make(1, "phone-b", 1.0e-3, 0.012, 0.0020, 0.004, 0.050, L::bggr),
                      make(2, "phone-c", 2.0e-4, 0.004, 0.0005, 0.001, 0.020, L::grbg),
                      make(3, "phone-d", 1.6e-3, 0.020, 0.0030, 0.006, 0.060, L::gbrg),
                      make(4, "phone-e", 2.5e-3, 0.030, 0.0040, 0.008, 0.0625, L::rggb)},
                     {1.0}};
    }
    if (name == "lowlight4") {
        return Fleet{"lowlight4",
                     {make(0, "dslr-a", 2.0e-5, 1.5e-4, 3.0e-5, 0.5e-4, 2.0e-4, L::rggb),
                      make(1, "dslr-b", 4.0e-5, 2.5e-4, 5.0e-5, 1.0e-4, 4.0e-4, L::bggr),
                      make(2, "dslr-c", 1.0e-5, 1.0e-4, 2.0e-5, 0.3e-4, 1.0e-4, L::grbg),
                      make(3, "dslr-d", 6.0e-5, 3.5e-4, 7.0e-5, 1.5e-4, 5.0e-4, L::gbrg)},
                     {100.0, 300.0}};
    }
    throw ContractViolation("unknown fleet preset '" + std::string(name) + "'");
}

} // namespace adlraw::sensorsim
