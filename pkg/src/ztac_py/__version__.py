# stub version string for imports. release builds overwrite this file with the
# tagged version.
VERSION = "v0.0.0-unknown"
