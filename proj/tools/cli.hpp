#pragma once

// Batch front end. Returns the process exit status: 0 ok, 2 validation
// failure (machine-readable error object on stdout), 3 work budget exceeded.
int cli_main(int argc, const char* const* argv);
