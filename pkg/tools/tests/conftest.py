def pytest_configure(config):
    config.addinivalue_line(
        "markers", "live: needs osmnx and network access to OpenStreetMap"
    )
