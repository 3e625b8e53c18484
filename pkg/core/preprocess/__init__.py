from .transforms import (
    COVID_WINDOW,
    WEATHER_CATEGORIES,
    LagSpec,
    add_lags,
    add_rolling_mean,
    exclude_window,
    group_weather,
    one_hot_weather,
)
