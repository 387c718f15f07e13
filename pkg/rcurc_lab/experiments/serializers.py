from rest_framework import serializers

PROBLEM_KINDS = ("synthetic", "video", "frames", "matrix", "observation")
MAX_SEED = 2 ** 64 - 1


class AutoOrFloatField(serializers.Field):
    """Número real, o la cadena "auto"."""

    default_error_messages = {
        'invalid': "Debe ser un número o 'auto'.",
        'negative': "Debe ser un número no negativo.",
    }

    def to_internal_value(self, data):
        if data == "auto":
            return "auto"
        if isinstance(data, bool):
            self.fail('invalid')
        try:
            value = float(data)
        except (TypeError, ValueError):
            self.fail('invalid')
        if value < 0:
            self.fail('negative')
        return value

    def to_representation(self, value):
        return value


class ProblemSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=PROBLEM_KINDS, default="synthetic")
    n1 = serializers.IntegerField(min_value=1, required=False)
    n2 = serializers.IntegerField(min_value=1, required=False)
    rank = serializers.IntegerField(min_value=1, required=False)
    alpha = serializers.FloatField(min_value=0.0, default=0.0)
    amp = serializers.FloatField(default=10.0)
    height = serializers.IntegerField(min_value=1, required=False)
    width = serializers.IntegerField(min_value=1, required=False)
    frames = serializers.IntegerField(min_value=1, required=False)
    frames_list = serializers.CharField(required=False)
    matrix = serializers.CharField(required=False)
    observation = serializers.CharField(required=False)
    truth = serializers.CharField(required=False)
    reference = serializers.CharField(required=False)
    peak = AutoOrFloatField(required=False)

    REQUIRED_BY_KIND = {
        "synthetic": ("n1", "n2", "rank"),
        "video": ("height", "width", "frames"),
        "frames": ("frames_list",),
        "matrix": ("matrix",),
        "observation": ("observation",),
    }

    def validate_alpha(self, value):
        if value >= 0.5:
            raise serializers.ValidationError("alpha debe ser menor que 0.5.")
        return value

    def validate_amp(self, value):
        if value <= 0:
            raise serializers.ValidationError("amp debe ser positivo.")
        return value

    def validate(self, data):
        missing = [name for name in self.REQUIRED_BY_KIND[data["kind"]] if name not in data]
        if missing:
            raise serializers.ValidationError(
                {name: f"Obligatorio para problemas de tipo '{data['kind']}'." for name in missing}
            )
        if data["kind"] == "video":
            data.setdefault("rank", 1)
        return data


class SamplingSerializer(serializers.Serializer):
    row_frac = serializers.FloatField(default=0.3)
    col_frac = serializers.FloatField(default=0.3)
    p_row = serializers.FloatField(default=0.25)
    p_col = serializers.FloatField(default=0.25)

    def validate(self, data):
        errors = {name: "Debe estar en (0, 1]." for name, value in data.items() if not 0.0 < value <= 1.0}
        if errors:
            raise serializers.ValidationError(errors)
        return data


class SolverSerializer(serializers.Serializer):
    """Campos ausentes toman el valor de settings.RCURC_SOLVER_DEFAULTS."""
    rank = serializers.IntegerField(min_value=1, required=False)
    eta_r = AutoOrFloatField(required=False)
    eta_c = AutoOrFloatField(required=False)
    zeta0 = AutoOrFloatField(required=False)
    gamma = serializers.FloatField(required=False)
    eps = serializers.FloatField(required=False)
    max_iters = serializers.IntegerField(min_value=1, required=False)
    stagnation_window = serializers.IntegerField(min_value=1, required=False)
    stagnation_tol = serializers.FloatField(min_value=0.0, required=False)

    def validate_gamma(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("gamma debe estar en (0, 1).")
        return value

    def validate_eps(self, value):
        if value <= 0:
            raise serializers.ValidationError("eps debe ser positivo.")
        return value


class ExperimentConfigSerializer(serializers.Serializer):
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, default=0)
    repeats = serializers.IntegerField(min_value=1, default=1)
    timing = serializers.BooleanField(default=True)
    problem = ProblemSerializer()
    sampling = SamplingSerializer()
    solver = SolverSerializer()
    outputs = serializers.CharField()

    def to_internal_value(self, data):
        if isinstance(data, dict):
            data = {"sampling": {}, "solver": {}, **data}
        return super().to_internal_value(data)

    def validate(self, data):
        solver = data["solver"]
        if "rank" not in solver:
            if "rank" not in data["problem"]:
                raise serializers.ValidationError({"solver": {"rank": "Falta el rango objetivo (solver.rank o problem.rank)."}})
            solver["rank"] = data["problem"]["rank"]
        return data

    def create(self, validated_data):
        # import local: runner importa este módulo
        from .runner import ExperimentConfig

        return ExperimentConfig.from_validated(validated_data)
