#pragma once

namespace secl {

/// Entry point of the `secl` tool. Returns the process exit status.
int cli_main(int argc, char** argv);

}  // namespace secl
