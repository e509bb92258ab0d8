#pragma once

// Everything except the HTTP server and the CLI, which pull in httplib and CLI11.
#include "adlsense/adl_segmentation.hpp"
#include "adlsense/casebase_cbr.hpp"
#include "adlsense/config.hpp"
#include "adlsense/error.hpp"
#include "adlsense/event_model.hpp"
#include "adlsense/pipeline.hpp"
#include "adlsense/profile_builder.hpp"
#include "adlsense/radar_render.hpp"
#include "adlsense/resident_sim.hpp"
#include "adlsense/risk_scoring.hpp"
#include "adlsense/service_api.hpp"
#include "adlsense/time.hpp"
