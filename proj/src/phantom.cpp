#include "koos/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "koos/error.hpp"
#include "koos/rng.hpp"

namespace koos::phantom {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Label IDs painted by the generator.
enum Label : std::uint16_t {
    kBackground = 0,
    kVs = 1,
    kPons = 2,
    kBrainstem = 3,
    kVermalI_V = 4,
    kVermalVI_VII = 5,
    kVermalVIII_X = 6,
    kLeftCbExterior = 7,
    kLeftCbWhite = 8,
    kRightCbExterior = 9,
    kRightCbWhite = 10,
};

struct Box {
    Vec3 lo, hi; // half-open [lo, hi)

    bool contains(const Vec3& p) const {
        for (int a = 0; a < 3; ++a)
            if (p[a] < lo[a] || p[a] >= hi[a]) return false;
        return true;
    }
    double distance(const Vec3& p) const {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            double d = std::max({lo[a] - p[a], 0.0, p[a] - hi[a]});
            d2 += d * d;
        }
        return std::sqrt(d2);
    }
};

struct Template {
    Vec3 center;     // grid center, world mm
    Box pons;
    Box vermal_1_5, vermal_6_7, vermal_8_10;
    Box left_cb_exterior, left_cb_white, right_cb_exterior, right_cb_white;
    // Brainstem: z cylinder at (center.x, center.y), radius kBrainstemRadius,
    // z in [center.z - kBrainstemHalfHeight, center.z + kBrainstemHalfHeight).

    Box left_cb_union() const { return {left_cb_exterior.lo, left_cb_white.hi}; }
    Box right_cb_union() const { return {right_cb_exterior.lo, right_cb_white.hi}; }
};

Template make_template(const PhantomSpec& spec) {
    Template t;
    for (int a = 0; a < 3; ++a)
        t.center[a] = (spec.dims[a] - 1) * spec.spacing[a] / 2.0;
    const double cx = t.center[0], cy = t.center[1], cz = t.center[2];

    t.pons = {{cx - 3.0, cy - 10.0, cz - 1.5}, {cx + 3.0, cy - 6.0, cz + 5.5}};
    t.vermal_1_5 = {{cx - 2.25, cy + 9.0, cz + 4.5}, {cx + 2.25, cy + 13.5, cz + 9.5}};
    t.vermal_6_7 = {{cx - 2.25, cy + 9.0, cz - 2.5}, {cx + 2.25, cy + 13.5, cz + 2.5}};
    t.vermal_8_10 = {{cx - 2.25, cy + 9.0, cz - 9.5}, {cx + 2.25, cy + 13.5, cz - 4.5}};
    // Cerebellum blocks sit posterior-lateral; each side splits into an
    // exterior half and a white-matter half along z so both label IDs occur.
    t.left_cb_exterior = {{cx - 13.0, cy + 8.0, cz - 8.0}, {cx - 5.5, cy + 14.0, cz}};
    t.left_cb_white = {{cx - 13.0, cy + 8.0, cz}, {cx - 5.5, cy + 14.0, cz + 8.0}};
    t.right_cb_exterior = {{cx + 5.5, cy + 8.0, cz - 8.0}, {cx + 13.0, cy + 14.0, cz}};
    t.right_cb_white = {{cx + 5.5, cy + 8.0, cz}, {cx + 13.0, cy + 14.0, cz + 8.0}};
    return t;
}

// Area of the intersection of two circles with radii r1, r2 and center
// distance d.
double circle_overlap_area(double r1, double r2, double d) {
    if (d >= r1 + r2) return 0.0;
    if (d <= std::abs(r1 - r2)) {
        double r = std::min(r1, r2);
        return kPi * r * r;
    }
    double alpha = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
    double beta = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
    double kite = 0.5 * std::sqrt(std::max(0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) *
                                                    (d + r1 + r2)));
    return r1 * r1 * alpha + r2 * r2 * beta - kite;
}

// Volume of sphere (center offset d_xy from the cylinder axis) intersected
// with the infinite-height part of the brainstem cylinder, by Simpson
// integration of per-slice circle overlaps. The sphere never reaches the
// cylinder's z caps, so the finite height does not matter.
double sphere_cylinder_overlap(double sphere_radius, double d_xy) {
    const int steps = 4096;
    const double h = 2.0 * sphere_radius / steps;
    double sum = 0.0;
    for (int i = 0; i <= steps; ++i) {
        double z = -sphere_radius + i * h;
        double rs2 = sphere_radius * sphere_radius - z * z;
        double area = rs2 > 0.0 ? circle_overlap_area(std::sqrt(rs2), kBrainstemRadius, d_xy) : 0.0;
        double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * area;
    }
    return sum * h / 3.0;
}

struct VsPlacement {
    Vec3 center;
    double radius;
    double radial_offset; // exact xy distance from the brainstem axis
};

void check_grade_regime(const PhantomSpec& spec) {
    const double r = spec.tumor_radius_mm;
    const double gap = spec.brainstem_gap_mm;
    switch (spec.grade) {
    case 1:
        if (r > kSmallRadiusMax || gap < kFarGapMin)
            fail(Errc::invalid_spec, "grade 1 requires radius <= 4 and gap >= 6");
        break;
    case 2:
        if (r <= kSmallRadiusMax || gap < kNearGapMin || gap >= kFarGapMin)
            fail(Errc::invalid_spec, "grade 2 requires radius > 4 and gap in [1, 6)");
        break;
    case 3:
        if (gap != 0.0)
            fail(Errc::invalid_spec, "grade 3 uses the contact construction; gap must be 0");
        break;
    case 4:
        if (gap >= -1.0 || gap < -4.0)
            fail(Errc::invalid_spec, "grade 4 requires an indentation depth in [1, 4]");
        break;
    default:
        fail(Errc::invalid_spec, "grade must be 1..4");
    }
    if (r < 1.0) fail(Errc::invalid_spec, "tumor radius below 1 mm");
}

VsPlacement place_vs(const PhantomSpec& spec, const Template& tpl) {
    check_grade_regime(spec);

    double gap_eff = spec.grade == 3 ? -kTouchOverlap : spec.brainstem_gap_mm;
    double radial = kBrainstemRadius + gap_eff + spec.tumor_radius_mm;
    if (radial <= 1.0) fail(Errc::invalid_spec, "tumor would swallow the brainstem axis");

    // Sub-voxel jitter; the radial offset is preserved exactly by folding the
    // y offset into the x coordinate.
    SplitMix64 rng(spec.seed);
    double jy = rng.uniform(-0.4, 0.4);
    double jz = rng.uniform(-0.4, 0.4);
    double sign = spec.side == geometry::Side::Right ? 1.0 : -1.0;

    VsPlacement vs;
    vs.radius = spec.tumor_radius_mm;
    vs.radial_offset = radial;
    vs.center = {tpl.center[0] + sign * std::sqrt(radial * radial - jy * jy),
                 tpl.center[1] + jy, tpl.center[2] + jz};

    for (int a = 0; a < 3; ++a) {
        double margin = 2.0 * spec.spacing[a];
        if (vs.center[a] - vs.radius < margin ||
            vs.center[a] + vs.radius > (spec.dims[a] - 1) * spec.spacing[a] - margin)
            fail(Errc::invalid_spec, "tumor does not fit inside the grid with a 2-voxel margin");
    }
    return vs;
}

class Painter {
public:
    explicit Painter(const PhantomSpec& spec) {
        vol_.dims = spec.dims;
        vol_.spacing = spec.spacing;
        vol_.affine = Affine4::diagonal({spec.spacing[0], spec.spacing[1], spec.spacing[2]});
        vol_.labels.assign(vol_.voxel_count(), 0);
        spacing_ = spec.spacing;
        dims_ = spec.dims;
    }

    Vec3 voxel_center(int x, int y, int z) const {
        return {x * spacing_[0], y * spacing_[1], z * spacing_[2]};
    }

    template <class Inside>
    void paint(std::uint16_t label, const Vec3& lo, const Vec3& hi, Inside inside) {
        int x0 = std::max(0, static_cast<int>(std::floor(lo[0] / spacing_[0])));
        int y0 = std::max(0, static_cast<int>(std::floor(lo[1] / spacing_[1])));
        int z0 = std::max(0, static_cast<int>(std::floor(lo[2] / spacing_[2])));
        int x1 = std::min(dims_[0] - 1, static_cast<int>(std::ceil(hi[0] / spacing_[0])));
        int y1 = std::min(dims_[1] - 1, static_cast<int>(std::ceil(hi[1] / spacing_[1])));
        int z1 = std::min(dims_[2] - 1, static_cast<int>(std::ceil(hi[2] / spacing_[2])));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!inside(voxel_center(x, y, z))) continue;
                    std::uint16_t& cell = vol_.labels[vol_.index(x, y, z)];
                    if (cell != 0)
                        fail(Errc::invalid_spec, "template shapes overlap; constants are broken");
                    cell = label;
                }
    }

    void paint_box(std::uint16_t label, const Box& box) {
        paint(label, box.lo, box.hi, [&](const Vec3& p) { return box.contains(p); });
    }

    nifti::LabelVolume take() { return std::move(vol_); }
    nifti::LabelVolume& volume() { return vol_; }

private:
    nifti::LabelVolume vol_;
    std::array<double, 3> spacing_;
    std::array<int, 3> dims_;
};

// The generator's own exact answers, read back off the painted grid with
// independent scans (no mask-geometry involvement).
struct PaintedFacts {
    double vs_volume_mm3 = 0.0;
    double vs_volume_tolerance = 0.0;
    double surf_background = 0.0;
    double contact_distance = -1.0; // min spacing over face-contact axes, -1 if none
};

PaintedFacts scan_painted(const nifti::LabelVolume& vol) {
    PaintedFacts facts;
    const auto& s = vol.spacing;
    const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
    std::uint64_t vs_count = 0, surface_count = 0;
    std::uint64_t bg_faces[3] = {0, 0, 0};
    bool contact_axis[3] = {false, false, false};

    auto label_at = [&](int x, int y, int z) { return vol.at(x, y, z); };
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                if (label_at(x, y, z) != kVs) continue;
                ++vs_count;
                bool on_surface = false;
                const int neighbor[6][4] = {{x - 1, y, z, 0}, {x + 1, y, z, 0},
                                            {x, y - 1, z, 1}, {x, y + 1, z, 1},
                                            {x, y, z - 1, 2}, {x, y, z + 1, 2}};
                for (const auto& nb : neighbor) {
                    // Tumor placement guarantees a 2-voxel margin, so
                    // neighbors are always inside the grid.
                    std::uint16_t other = label_at(nb[0], nb[1], nb[2]);
                    if (other == kVs) continue;
                    on_surface = true;
                    if (other == kBackground) ++bg_faces[nb[3]];
                    if (other == kBrainstem) contact_axis[nb[3]] = true;
                }
                if (on_surface) ++surface_count;
            }

    double voxel_volume = s[0] * s[1] * s[2];
    facts.vs_volume_mm3 = static_cast<double>(vs_count) * voxel_volume;
    facts.vs_volume_tolerance = static_cast<double>(surface_count) * voxel_volume;
    facts.surf_background = static_cast<double>(bg_faces[0]) * s[1] * s[2] +
                            static_cast<double>(bg_faces[1]) * s[0] * s[2] +
                            static_cast<double>(bg_faces[2]) * s[0] * s[1];
    double contact = -1.0;
    for (int a = 0; a < 3; ++a)
        if (contact_axis[a] && (contact < 0.0 || s[a] < contact)) contact = s[a];
    facts.contact_distance = contact;
    return facts;
}

} // namespace

PhantomCase generate_phantom(const PhantomSpec& spec) {
    for (int a = 0; a < 3; ++a) {
        if (spec.dims[a] < 1 || spec.spacing[a] <= 0.0)
            fail(Errc::invalid_spec, "bad dims/spacing");
    }
    Template tpl = make_template(spec);
    const double half_x = tpl.center[0], half_y = tpl.center[1], half_z = tpl.center[2];
    if (half_x < 13.5 || half_y < 14.5 || half_z < 10.5)
        fail(Errc::invalid_spec, "grid too small for the template anatomy");

    VsPlacement vs = place_vs(spec, tpl);

    Painter painter(spec);
    painter.paint_box(kPons, tpl.pons);
    painter.paint_box(kVermalI_V, tpl.vermal_1_5);
    painter.paint_box(kVermalVI_VII, tpl.vermal_6_7);
    painter.paint_box(kVermalVIII_X, tpl.vermal_8_10);
    painter.paint_box(kLeftCbExterior, tpl.left_cb_exterior);
    painter.paint_box(kLeftCbWhite, tpl.left_cb_white);
    painter.paint_box(kRightCbExterior, tpl.right_cb_exterior);
    painter.paint_box(kRightCbWhite, tpl.right_cb_white);

    const double bs_z0 = tpl.center[2] - kBrainstemHalfHeight;
    const double bs_z1 = tpl.center[2] + kBrainstemHalfHeight;
    painter.paint(kBrainstem,
                  {tpl.center[0] - kBrainstemRadius, tpl.center[1] - kBrainstemRadius, bs_z0},
                  {tpl.center[0] + kBrainstemRadius, tpl.center[1] + kBrainstemRadius, bs_z1},
                  [&](const Vec3& p) {
                      double dx = p[0] - tpl.center[0], dy = p[1] - tpl.center[1];
                      return dx * dx + dy * dy <= kBrainstemRadius * kBrainstemRadius &&
                             p[2] >= bs_z0 && p[2] < bs_z1;
                  });

    // VS sphere. Grades 1-2 must not collide with anything; grade 3 leaves
    // shared voxels to the brainstem (contact, no carving); grade 4 takes
    // them (indentation).
    nifti::LabelVolume& vol = painter.volume();
    {
        const double r2 = vs.radius * vs.radius;
        int x0 = static_cast<int>(std::floor((vs.center[0] - vs.radius) / spec.spacing[0]));
        int y0 = static_cast<int>(std::floor((vs.center[1] - vs.radius) / spec.spacing[1]));
        int z0 = static_cast<int>(std::floor((vs.center[2] - vs.radius) / spec.spacing[2]));
        int x1 = static_cast<int>(std::ceil((vs.center[0] + vs.radius) / spec.spacing[0]));
        int y1 = static_cast<int>(std::ceil((vs.center[1] + vs.radius) / spec.spacing[1]));
        int z1 = static_cast<int>(std::ceil((vs.center[2] + vs.radius) / spec.spacing[2]));
        for (int z = std::max(0, z0); z <= std::min(spec.dims[2] - 1, z1); ++z)
            for (int y = std::max(0, y0); y <= std::min(spec.dims[1] - 1, y1); ++y)
                for (int x = std::max(0, x0); x <= std::min(spec.dims[0] - 1, x1); ++x) {
                    Vec3 p = painter.voxel_center(x, y, z);
                    double dx = p[0] - vs.center[0], dy = p[1] - vs.center[1],
                           dz = p[2] - vs.center[2];
                    if (dx * dx + dy * dy + dz * dz > r2) continue;
                    std::uint16_t& cell = vol.labels[vol.index(x, y, z)];
                    if (cell == kBackground) {
                        cell = kVs;
                    } else if (cell == kBrainstem && spec.grade == 4) {
                        cell = kVs;
                    } else if (cell == kBrainstem && spec.grade == 3) {
                        // brainstem keeps the voxel
                    } else if (cell != kBackground) {
                        fail(Errc::invalid_spec, "tumor collides with template anatomy");
                    }
                }
    }

    PaintedFacts facts = scan_painted(vol);
    if (facts.vs_volume_mm3 == 0.0) fail(Errc::invalid_spec, "tumor rasterized to nothing");
    if ((spec.grade == 3 || spec.grade == 4) && facts.contact_distance < 0.0)
        fail(Errc::invalid_spec, "contact construction produced no brainstem contact");
    if (spec.grade <= 2 && facts.contact_distance >= 0.0)
        fail(Errc::invalid_spec, "clear-gap construction produced brainstem contact");

    PhantomCase out;
    out.grade = spec.grade;
    out.volume_tolerance = facts.vs_volume_tolerance;
    out.distance_slack =
        2.0 * std::sqrt(spec.spacing[0] * spec.spacing[0] + spec.spacing[1] * spec.spacing[1] +
                        spec.spacing[2] * spec.spacing[2]);

    double sphere_volume = 4.0 / 3.0 * kPi * vs.radius * vs.radius * vs.radius;
    double carved = spec.grade >= 3 ? sphere_cylinder_overlap(vs.radius, vs.radial_offset) : 0.0;
    out.expected.vs_volume = sphere_volume - carved;

    out.expected.dist_pons = std::max(0.0, tpl.pons.distance(vs.center) - vs.radius);
    out.expected.dist_brainstem = spec.grade >= 3
                                      ? facts.contact_distance
                                      : vs.radial_offset - kBrainstemRadius - vs.radius;
    out.expected.dist_vermal_1_5 = std::max(0.0, tpl.vermal_1_5.distance(vs.center) - vs.radius);
    out.expected.dist_vermal_6_7 = std::max(0.0, tpl.vermal_6_7.distance(vs.center) - vs.radius);
    out.expected.dist_vermal_8_10 =
        std::max(0.0, tpl.vermal_8_10.distance(vs.center) - vs.radius);
    Box ipsi = spec.side == geometry::Side::Right ? tpl.right_cb_union() : tpl.left_cb_union();
    Box contra = spec.side == geometry::Side::Right ? tpl.left_cb_union() : tpl.right_cb_union();
    out.expected.dist_ipsi_cerebellum = std::max(0.0, ipsi.distance(vs.center) - vs.radius);
    out.expected.dist_contra_cerebellum = std::max(0.0, contra.distance(vs.center) - vs.radius);
    out.expected.surf_background = facts.surf_background;

    out.volume = painter.take();
    return out;
}

std::vector<GeneratedCase> generate_dataset(int per_grade, std::uint64_t seed) {
    if (per_grade < 1) fail(Errc::invalid_spec, "per_grade must be >= 1");

    std::vector<GeneratedCase> cases;
    cases.reserve(static_cast<std::size_t>(per_grade) * 4);
    for (int i = 0; i < per_grade * 4; ++i) {
        int grade = 1 + i / per_grade;
        SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));

        PhantomSpec spec;
        spec.grade = grade;
        spec.side = (rng.next() & 1) ? geometry::Side::Right : geometry::Side::Left;
        // Jitter ranges keep each grade inside its regime, inside the grid,
        // and volume-separable from its neighbors (see grade_from_features).
        switch (grade) {
        case 1:
            spec.tumor_radius_mm = rng.uniform(2.2, 2.8);
            spec.brainstem_gap_mm = rng.uniform(6.0, 6.6);
            break;
        case 2:
            spec.tumor_radius_mm = rng.uniform(4.4, 5.4);
            spec.brainstem_gap_mm =
                rng.uniform(1.2, std::min(3.4, 12.25 - 2.0 * spec.tumor_radius_mm));
            break;
        case 3:
            spec.tumor_radius_mm = rng.uniform(4.2, 5.4);
            spec.brainstem_gap_mm = 0.0;
            break;
        default:
            spec.tumor_radius_mm = rng.uniform(6.0, 6.6);
            spec.brainstem_gap_mm = -rng.uniform(2.2, 2.8);
            break;
        }
        spec.seed = rng.next();

        PhantomCase made = generate_phantom(spec);
        GeneratedCase out;
        char case_id[32];
        std::snprintf(case_id, sizeof(case_id), "grade%d_%03d", grade, i % per_grade);
        out.record.case_id = case_id;
        out.record.features = made.expected;
        out.record.grade = made.grade;
        out.volume = std::move(made.volume);
        cases.push_back(std::move(out));
    }
    return cases;
}

std::string phantom_atlas_text() {
    return "# Structure -> label IDs painted by the phantom generator.\n"
           "VS = 1\n"
           "Pons = 2\n"
           "Brainstem = 3\n"
           "VermalLobulesI_V = 4\n"
           "VermalLobulesVI_VII = 5\n"
           "VermalLobulesVIII_X = 6\n"
           "LeftCerebellum = 7,8\n"
           "RightCerebellum = 9,10\n";
}

const atlas::AtlasConfig& phantom_atlas() {
    static const atlas::AtlasConfig config = atlas::load_atlas(phantom_atlas_text());
    return config;
}

int grade_from_features(const features::FeatureVector& fv) {
    // Touching means the measured distance equals one voxel step; 0.75 sits
    // between the default min spacing (0.5) and the smallest clear gap (1.2).
    bool touching = fv.dist_brainstem >= 0.0 && fv.dist_brainstem <= 0.75;
    if (touching) return fv.vs_volume > 750.0 ? 4 : 3;
    return fv.vs_volume > 200.0 ? 2 : 1;
}

} // namespace koos::phantom
