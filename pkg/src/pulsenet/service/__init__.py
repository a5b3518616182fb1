"""HTTP service wrapper. Import pulsenet.service.app:app for uvicorn."""
