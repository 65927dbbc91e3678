#include "she/noise.hpp"

#include <cmath>
#include <sstream>

#include "she/errors.hpp"
#include "she/kernel.hpp"

namespace she {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Cells are offset so that negative global indices map into 32 bits.
constexpr std::int64_t kCellOffset = std::int64_t{1} << 31;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

inline std::array<std::uint32_t, 4> block(const NoiseKey& key, std::int64_t step, std::int64_t pair) {
    return philox4x32({static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(step),
                       static_cast<std::uint32_t>(key.replica), static_cast<std::uint32_t>(key.replica >> 32)},
                      {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)});
}

void check_capacity(const Grid& g, std::int64_t max_entries) {
    const std::int64_t entries = g.n_steps() * g.cells();
    if (entries > max_entries) {
        std::ostringstream os;
        os << "noise field of " << entries << " entries exceeds the capacity of " << max_entries
           << "; generate rows with noise_row instead";
        throw CapacityError(os.str());
    }
}

NoiseField empty_field(const NoiseSpec& spec) {
    NoiseField f{spec.grid, spec.grid.dt() * spec.grid.dx(), {}};
    f.increments.resize(static_cast<std::size_t>(spec.grid.n_steps() * spec.grid.cells()));
    return f;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view scope) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : scope) {
        h = (h ^ c) * 0x100000001b3ull;
    }
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (h | 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double standard_normal(const NoiseKey& key, std::int64_t step, std::int64_t global_cell) {
    const std::int64_t shifted = global_cell + kCellOffset;
    const auto b = block(key, step, shifted >> 1);
    return (shifted & 1) == 0 ? normal_quantile(to_open_unit(b[0], b[1])) : normal_quantile(to_open_unit(b[2], b[3]));
}

void standard_normal_row(const NoiseKey& key, std::int64_t step, std::int64_t first, std::span<double> out) {
    const auto n = static_cast<std::int64_t>(out.size());
    std::int64_t i = 0;
    while (i < n) {
        const std::int64_t shifted = first + i + kCellOffset;
        const auto b = block(key, step, shifted >> 1);
        if ((shifted & 1) == 0) {
            out[static_cast<std::size_t>(i)] = normal_quantile(to_open_unit(b[0], b[1]));
            if (i + 1 < n) {
                out[static_cast<std::size_t>(i + 1)] = normal_quantile(to_open_unit(b[2], b[3]));
            }
            i += 2;
        } else {
            out[static_cast<std::size_t>(i)] = normal_quantile(to_open_unit(b[2], b[3]));
            i += 1;
        }
    }
}

void noise_row(const NoiseSpec& spec, std::int64_t n, std::span<double> out) {
    const Grid& g = spec.grid;
    standard_normal_row(spec.key(), n, g.global_index(0), out.first(static_cast<std::size_t>(g.cells())));
    const double scale = std::sqrt(g.dt() * g.dx());
    for (auto& v : out.first(static_cast<std::size_t>(g.cells()))) {
        v *= scale;
    }
}

NoiseField sample_noise(const NoiseSpec& spec, std::int64_t max_entries) {
    check_capacity(spec.grid, max_entries);
    NoiseField f = empty_field(spec);
    const std::int64_t cells = spec.grid.cells();
    const std::int64_t steps = spec.grid.n_steps();
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < steps; ++n) {
        noise_row(spec, n, std::span<double>(f.increments.data() + n * cells, static_cast<std::size_t>(cells)));
    }
    return f;
}

NoiseField sample_noise_serial(const NoiseSpec& spec, std::int64_t max_entries) {
    check_capacity(spec.grid, max_entries);
    NoiseField f = empty_field(spec);
    const std::int64_t cells = spec.grid.cells();
    for (std::int64_t n = 0; n < spec.grid.n_steps(); ++n) {
        noise_row(spec, n, std::span<double>(f.increments.data() + n * cells, static_cast<std::size_t>(cells)));
    }
    return f;
}

double sheet_value(const NoiseField& field, double t, double x) {
    const Grid& g = field.grid;
    if (g.centre_index() != 0) {
        throw PreconditionError("sheet_value: grid must be centred at 0");
    }
    if (!(t >= 0.0) || !g.contains(x)) {
        throw PreconditionError("sheet_value: (t, x) outside the grid");
    }
    const std::int64_t steps = std::min(g.step_of(t), g.n_steps());
    const std::int64_t k = std::llround(std::abs(x) / g.dx());
    if (steps == 0 || k == 0) {
        return 0.0;
    }
    const std::int64_t lo = x > 0 ? g.half_cells() + 1 : g.half_cells() - k;
    const std::int64_t hi = x > 0 ? g.half_cells() + k : g.half_cells() - 1;
    double sum = 0.0;
    for (std::int64_t n = 0; n < steps; ++n) {
        for (std::int64_t j = lo; j <= hi; ++j) {
            sum += field(n, j);
        }
    }
    return sum;
}

double brownian_sheet_check(const NoiseField& field, double s, double t, double x, double y) {
    return sheet_value(field, s, x) * sheet_value(field, t, y);
}

}  // namespace she
