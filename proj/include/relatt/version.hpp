#pragma once

#define RELATT_VERSION "0.1.0"
