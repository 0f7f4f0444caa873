#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ssmrecon/mesh.hpp"

namespace ssmrecon {

/// Closed loop in the (y, z) plane. Outer boundaries run counter-clockwise.
using Polygon2 = std::vector<Vec2>;

struct Window2 {
    Vec2 min = Vec2::Zero();
    Vec2 max = Vec2::Zero();
};

/// Row-major R x R binary raster; row index follows z, column index follows y,
/// pixel (0, 0) sits at the window minimum corner.
class Mask {
public:
    Mask() = default;
    explicit Mask(int resolution) : resolution_(resolution), bits_(static_cast<std::size_t>(resolution) * resolution, 0) {}

    [[nodiscard]] int resolution() const { return resolution_; }
    [[nodiscard]] std::uint8_t at(int row, int col) const { return bits_[index(row, col)]; }
    void set(int row, int col, bool on) { bits_[index(row, col)] = on ? 1 : 0; }
    [[nodiscard]] const std::vector<std::uint8_t>& bits() const { return bits_; }
    [[nodiscard]] std::size_t count_on() const;

    bool operator==(const Mask&) const = default;

private:
    [[nodiscard]] std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * resolution_ + col;
    }
    int resolution_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Plane offsets are fractions of the window's x-extent.
struct SliceProtocol {
    std::vector<double> offsets{0.35, 0.50, 0.65};
    Box3 window;
    int resolution = 192;

    void validate() const;
    [[nodiscard]] Plane plane(std::size_t i) const;
};

struct MaskStack {
    std::vector<Mask> masks;
    std::vector<double> offsets;  ///< fractions, one per mask
    Box3 window;
    double spacing_y = 0.0;  ///< mm per pixel
    double spacing_z = 0.0;

    [[nodiscard]] int resolution() const { return masks.empty() ? 0 : masks.front().resolution(); }
    /// Length (#slices) * R^2, slice-major then row-major, values 0/1.
    [[nodiscard]] std::size_t input_size() const;
};

/// Plane/mesh intersection chained into closed loops. Vertices lying exactly
/// on the plane are treated as being on the positive side.
[[nodiscard]] std::vector<Polygon2> cross_section(const TriMesh& mesh, const Plane& plane);

[[nodiscard]] double signed_area(const Polygon2& loop);
[[nodiscard]] double total_signed_area(const std::vector<Polygon2>& loops);

/// Even-odd fill sampled at pixel centres.
[[nodiscard]] Mask rasterize(const std::vector<Polygon2>& loops, const Window2& window,
                             int resolution);

[[nodiscard]] Window2 yz_window(const Box3& box);

[[nodiscard]] MaskStack make_mask_stack(const TriMesh& mesh, const SliceProtocol& protocol);

/// Population bounding box grown by `margin` of its extent on every side, with
/// the y and z extents made equal so pixels are square.
[[nodiscard]] Box3 shared_window(const std::vector<Box3>& boxes, double margin = 0.10);

/// Binary PGM (P5, maxval 255, values 0 or 255).
void save_mask(const Mask& mask, const std::filesystem::path& path);
[[nodiscard]] Mask load_mask(const std::filesystem::path& path);

/// JSON manifest listing member PGM files (stored next to the manifest),
/// plane offsets, window box and pixel spacing.
void save_mask_stack(const MaskStack& stack, const std::filesystem::path& manifest);
[[nodiscard]] MaskStack load_mask_stack(const std::filesystem::path& manifest);

}  // namespace ssmrecon
