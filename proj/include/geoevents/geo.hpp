#pragma once

namespace geoevents {

inline constexpr double kEarthRadiusM = 6371000.0;

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(LatLon a, LatLon b);

}  // namespace geoevents
