#pragma once
// Published per-dimension scores for twelve systems, with the two averages
// reported alongside them. Rows are labelled by position only.

#include <array>

namespace counsel::testing {

struct PublishedRow {
  const char* label;
  double alliance, interaction, single_avg;
  double coherence, flexibility, empathy, attunement, multi_avg;
};

inline constexpr std::array<PublishedRow, 12> kPublishedRows = {{
    {"row-01", 0.237, 0.038, 0.138, 0.472, 0.541, 0.384, 0.363, 0.440},
    {"row-02", 0.374, 0.063, 0.219, 0.640, 0.710, 0.550, 0.440, 0.585},
    {"row-03", 0.571, 0.150, 0.361, 1.150, 1.560, 1.380, 1.360, 1.363},
    {"row-04", 0.644, 0.198, 0.421, 1.210, 1.570, 1.670, 1.720, 1.543},
    {"row-05", 1.035, 0.598, 0.817, 1.440, 1.610, 2.150, 2.000, 1.800},
    {"row-06", 0.837, 0.518, 0.678, 1.590, 1.810, 1.850, 1.970, 1.805},
    {"row-07", 0.643, 0.497, 0.570, 1.510, 1.980, 1.950, 1.830, 1.818},
    {"row-08", 0.860, 0.485, 0.673, 1.650, 1.860, 2.080, 2.070, 1.915},
    {"row-09", 0.963, 0.526, 0.745, 1.660, 1.760, 2.240, 2.090, 1.938},
    {"row-10", 1.978, 1.712, 1.845, 2.160, 2.100, 2.590, 2.470, 2.330},
    {"row-11", 1.424, 2.373, 1.899, 2.390, 2.060, 2.570, 2.320, 2.335},
    {"row-12", 2.210, 2.505, 2.358, 2.860, 2.290, 2.980, 2.890, 2.755},
}};

// Row 12 relative to row 10 on the multi-session average, in percent.
inline constexpr double kPublishedImprovementPct = 18.2;

}  // namespace counsel::testing
