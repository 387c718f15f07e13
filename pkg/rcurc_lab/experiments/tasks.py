from celery import shared_task

from .runner import build_config, run_repeat


@shared_task
def run_repeat_task(config, index, export_frames=False):
    # config llega como dict JSON; se valida de nuevo en el worker
    cfg = build_config(config)
    return run_repeat(cfg, index, export_frames)
