app_name = "FirmFuzz-CLI"
app_version = "0.1.0"
