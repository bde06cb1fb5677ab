// Coefficient tables for the Shekel and Hartman families.

#include "abcd/testbed.hpp"

namespace abcd::testbed::data {

const std::array<std::array<double, 4>, kShekelRows> kShekelA{{
    {4.0, 4.0, 4.0, 4.0},
    {1.0, 1.0, 1.0, 1.0},
    {8.0, 8.0, 8.0, 8.0},
    {6.0, 6.0, 6.0, 6.0},
    {3.0, 7.0, 3.0, 7.0},
    {2.0, 9.0, 2.0, 9.0},
    {5.0, 5.0, 3.0, 3.0},
    {8.0, 1.0, 8.0, 1.0},
    {6.0, 2.0, 6.0, 2.0},
    {7.0, 3.6, 7.0, 3.6},
}};

const std::array<double, kShekelRows> kShekelC{
    0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};

const std::array<double, 4> kHartmanC{1.0, 1.2, 3.0, 3.2};

const std::array<std::array<double, 3>, 4> kHartman3A{{
    {3.0, 10.0, 30.0},
    {0.1, 10.0, 35.0},
    {3.0, 10.0, 30.0},
    {0.1, 10.0, 35.0},
}};

const std::array<std::array<double, 3>, 4> kHartman3P{{
    {0.3689, 0.1170, 0.2673},
    {0.4699, 0.4387, 0.7470},
    {0.1091, 0.8732, 0.5547},
    {0.03815, 0.5743, 0.8828},
}};

const std::array<std::array<double, 6>, 4> kHartman6A{{
    {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
    {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
    {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
    {17.0, 8.0, 0.05, 10.0, 0.1, 14.0},
}};

const std::array<std::array<double, 6>, 4> kHartman6P{{
    {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
    {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
    {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
    {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381},
}};

}  // namespace abcd::testbed::data
