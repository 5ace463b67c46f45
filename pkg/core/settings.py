"""
Django settings for core project.

The project hosts the equilibrium engine: numerical apps (preferences,
market, fbsde, equilibrium), the shared `common` app and the `scenarios`
app that exposes the command-line pipelines and the run registry.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-equilibrium-engine-local-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=False, cast=bool)
ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='127.0.0.1,localhost').split(',')

# URL Configuration
APPEND_SLASH = False


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Third-party apps
    'rest_framework',

    # Local apps
    'common',
    'preferences',
    'market',
    'fbsde',
    'equilibrium',
    'scenarios',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'common.middleware.EngineHeadersMiddleware',  # provenance headers on the runs API
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'core.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'core.wsgi.application'


# Database
# SQLite for desk runs; set DB_ENGINE=django.db.backends.postgresql in production.

DB_ENGINE = config('DB_ENGINE', default='django.db.backends.sqlite3')

if DB_ENGINE.endswith('sqlite3'):
    DATABASES = {
        'default': {
            'ENGINE': DB_ENGINE,
            'NAME': config('DB_NAME', default=str(BASE_DIR / 'db.sqlite3')),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': DB_ENGINE,
            'NAME': config('DB_NAME', default='equilibriumdb'),
            'USER': config('DB_USER', default='equilibrium'),
            'PASSWORD': config('DB_PASSWORD', default=''),
            'HOST': config('DB_HOST', default='localhost'),
            'PORT': config('DB_PORT', default='5432'),
        }
    }


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)

STATIC_URL = 'static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Django REST Framework settings
REST_FRAMEWORK = {
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',  # read-only registry
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'UNICODE_JSON': True
}


# Logging

LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'engine': {
            'format': '[{asctime}] {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'engine',
        },
    },
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('common', 'preferences', 'market', 'fbsde', 'equilibrium', 'scenarios')
    },
}


# Equilibrium engine numerics

ENGINE_VERSION = '1.0.0'

EQUILIBRIUM_ENGINE = {
    'DEFAULT_SEED': config('ENGINE_SEED', default=42, cast=int),
    'DEFAULT_STEPS': config('ENGINE_STEPS', default=200, cast=int),
    'DEFAULT_PATHS': config('ENGINE_PATHS', default=10000, cast=int),
    'INNER_PATHS': config('ENGINE_INNER_PATHS', default=64, cast=int),
    'BASIS_DEGREE': 3,
    'RIDGE': 1e-8,
    'Z_MAX': 10.0,
    'ODE_STEP': 1e-4,
    'QUAD_TOL': 1e-10,
    'INVERSE_TOL': 1e-8,
    'CONDITION_LIMIT': 1e12,
    'TRUNCATION_LIMIT': 0.01,
    'BLOCK_SIZE': 1024,
    'WORKERS': config('ENGINE_WORKERS', default=4, cast=int),
    'CHECK_BOUNDS': config('ENGINE_CHECK_BOUNDS', default=DEBUG, cast=bool),
    'OUTPUT_DIR': config('ENGINE_OUTPUT_DIR', default=str(BASE_DIR / 'artifacts')),
}
